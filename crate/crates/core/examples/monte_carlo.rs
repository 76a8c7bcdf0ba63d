//! A small ASNR sweep through the harness API, written to a temporary
//! directory. `doa run` does the same from a config file.

use beamspace_doa::harness::{run_experiment, write_outputs, ExperimentConfig};

fn main() -> beamspace_doa::Result<()> {
    let cfg = ExperimentConfig::parse(
        "harness.asnr_db = 0, 6, 12\n\
         harness.trials = 200\n\
         harness.pipelines = fine-cov, fine-sect, fine-oracle\n",
    )?;
    let out = run_experiment(&cfg, &|i, n, key| eprintln!("cell {i}/{n} at {} dB", key.asnr_db))?;
    println!("{:<12} {:>6} {:>11} {:>8} {:>9}", "pipeline", "ASNR", "RMSE", "gap dB", "fail");
    for r in &out.reports {
        let m = &r.metrics;
        println!("{:<12} {:>6.1} {:>11.4e} {:>8.2} {:>9.3}", r.pipeline, r.key.asnr_db, m.rmse, m.gap_db, m.fail_rate);
    }
    let dir = std::env::temp_dir().join("doa-monte-carlo");
    write_outputs(&out, &dir)?;
    println!("results in {}", dir.display());
    Ok(())
}
