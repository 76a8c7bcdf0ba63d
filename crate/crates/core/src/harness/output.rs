//! CSV and JSON emission.
//!
//! Floats are written with nine significant digits in scientific notation;
//! missing values are empty fields.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentKind;
use super::experiment::{ExperimentOutput, PipelineReport};
use crate::error::Result;

/// Version stamped on every output row.
pub const ARTIFACT_VERSION: &str = concat!("beamspace-doa/", env!("CARGO_PKG_VERSION"));

pub const RESULTS_HEADER: [&str; 21] = [
    "experiment",
    "pipeline",
    "asnr_db",
    "kf",
    "offset_norm",
    "rmse_rad",
    "crb_sqrt_rad",
    "gap_db",
    "fail_rate",
    "fail_lo",
    "fail_hi",
    "lpa_p50_deg",
    "lpa_min_p50_deg",
    "t_cov_ms",
    "t_sel_ms",
    "t_es_ms",
    "t_total_ms",
    "trials",
    "aborted",
    "config_hash",
    "artifact_version",
];

fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn results_rows(out: &ExperimentOutput) -> Vec<Vec<String>> {
    let hash = &out.config.config_hash;
    out.reports
        .iter()
        .map(|r| {
            let m = &r.metrics;
            let t = r.timing;
            vec![
                r.key.experiment.to_string(),
                r.pipeline.to_string(),
                num(r.key.asnr_db),
                r.key.kf.to_string(),
                opt(r.key.offset_norm),
                num(m.rmse),
                num(m.crb_sqrt),
                num(m.gap_db),
                num(m.fail_rate),
                num(m.fail_lo),
                num(m.fail_hi),
                num(m.lpa_p50_deg),
                num(m.lpa_min_p50_deg),
                opt(t.map(|t| t.t_cov)),
                opt(t.map(|t| t.t_sel)),
                opt(t.map(|t| t.t_es)),
                opt(t.map(|t| t.t_total)),
                m.trials.to_string(),
                m.aborted.to_string(),
                hash.clone(),
                ARTIFACT_VERSION.to_string(),
            ]
        })
        .collect()
}

fn write_csv<W: std::io::Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header)?;
    for row in rows {
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// `results.csv` contents.
pub fn results_csv(out: &ExperimentOutput) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, &RESULTS_HEADER, results_rows(out))?;
    Ok(buf)
}

/// `ecdf.csv` contents: one row per ECDF step of every report.
pub fn ecdf_csv(out: &ExperimentOutput) -> Result<Vec<u8>> {
    let header = ["experiment", "asnr_db", "kf", "offset_norm", "pipeline", "error", "fraction"];
    let rows = out.reports.iter().flat_map(|r| {
        r.metrics.ecdf.iter().map(move |&(e, f)| {
            vec![
                r.key.experiment.to_string(),
                num(r.key.asnr_db),
                r.key.kf.to_string(),
                opt(r.key.offset_norm),
                r.pipeline.to_string(),
                num(e),
                num(f),
            ]
        })
    });
    let mut buf = Vec::new();
    write_csv(&mut buf, &header, rows)?;
    Ok(buf)
}

/// `pareto.csv` contents: median total runtime against RMSE per budget cell.
pub fn pareto_csv(out: &ExperimentOutput) -> Result<Vec<u8>> {
    let header = ["pipeline", "asnr_db", "fine_beams", "t_total_ms", "rmse_rad", "config_hash"];
    let d = out.config.mu.len();
    let rows = out.reports.iter().map(|r| {
        vec![
            r.pipeline.to_string(),
            num(r.key.asnr_db),
            (r.key.kf * d).to_string(),
            opt(r.timing.map(|t| t.t_total)),
            num(r.metrics.rmse),
            out.config.config_hash.clone(),
        ]
    });
    let mut buf = Vec::new();
    write_csv(&mut buf, &header, rows)?;
    Ok(buf)
}

#[derive(Serialize)]
struct Summary<'a> {
    artifact_version: &'a str,
    config_hash: &'a str,
    experiment: ExperimentKind,
    seed: u64,
    trials: u64,
    eigen_map: String,
    coarse_solver: String,
    fine_solver: String,
    parameters: &'a super::config::ExperimentConfig,
    reports: &'a [PipelineReport],
}

/// `summary.json` contents (non-finite numbers become `null`).
pub fn summary_json(out: &ExperimentOutput) -> Result<Vec<u8>> {
    let c = &out.config;
    let s = Summary {
        artifact_version: ARTIFACT_VERSION,
        config_hash: &c.config_hash,
        experiment: c.experiment,
        seed: c.seed,
        trials: c.trials,
        eigen_map: c.eigen_map.to_string(),
        coarse_solver: c.coarse_solver.to_string(),
        fine_solver: c.fine_solver.to_string(),
        parameters: c,
        reports: &out.reports,
    };
    let mut buf = serde_json::to_vec_pretty(&s)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes all output files into `dir`, creating it if needed.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(out)?)?;
    fs::write(dir.join("ecdf.csv"), ecdf_csv(out)?)?;
    fs::write(dir.join("summary.json"), summary_json(out)?)?;
    if out.config.experiment == ExperimentKind::Budget {
        fs::write(dir.join("pareto.csv"), pareto_csv(out)?)?;
    }
    Ok(())
}
