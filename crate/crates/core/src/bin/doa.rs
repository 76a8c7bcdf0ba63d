use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beamspace_doa::harness::{run_experiment, write_outputs, ExperimentConfig, RawConfig};

#[derive(Parser)]
#[command(name = "doa", version, about = "Beamspace DOA Monte Carlo benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Monte Carlo trials per cell.
        #[arg(long)]
        trials: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// asnr, budget, edge or kf.
        #[arg(long)]
        experiment: Option<String>,
        /// Comma-separated pipeline names.
        #[arg(long)]
        pipelines: Option<String>,
        /// Use the full-scale trial count from the config.
        #[arg(long, conflicts_with = "trials")]
        full_scale: bool,
    },
}

fn run(cmd: Command) -> beamspace_doa::Result<()> {
    let Command::Run { config, trials, threads, out, experiment, pipelines, full_scale } = cmd;
    let mut raw = RawConfig::from_file(&config)?;
    if let Some(t) = trials {
        raw.set("harness.trials", t.to_string())?;
    }
    if full_scale {
        let full = raw.get("harness.full_scale_trials").unwrap_or("10000").to_string();
        raw.set("harness.trials", full)?;
    }
    if let Some(n) = threads {
        raw.set("harness.threads", n.to_string())?;
    }
    if let Some(dir) = &out {
        raw.set("harness.out", dir.display().to_string())?;
    }
    if let Some(e) = experiment {
        raw.set("harness.experiment", e)?;
    }
    if let Some(p) = pipelines {
        raw.set("harness.pipelines", p)?;
    }
    let cfg = ExperimentConfig::from_raw(&raw)?;
    eprintln!(
        "{} experiment, {} trials per cell, config {}",
        cfg.experiment, cfg.trials, cfg.config_hash
    );
    let result = run_experiment(&cfg, &|i, n, key| {
        let offset = key.offset_norm.map(|o| format!(" offset {o:+.3}")).unwrap_or_default();
        eprintln!("[{i}/{n}] asnr {:.1} dB kf {}{offset}", key.asnr_db, key.kf);
    })?;
    write_outputs(&result, &cfg.out)?;
    eprintln!("wrote {}", cfg.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
