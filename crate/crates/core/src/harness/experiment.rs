//! Experiment grids, parallel trial execution and per-cell aggregation.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::pipeline::{run_trial, PipelineContext, PipelineId, PipelineSettings, Timings, TrialResult};
use crate::array::{n0_to_asnr, Scenario};
use crate::error::{DoaError, Result};
use crate::metrics::{median, pearson, stochastic_crb, trial_rms, MetricsReport};
use crate::rng::derive_seed;

/// Coordinates of one experiment cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CellKey {
    pub experiment: ExperimentKind,
    pub asnr_db: f64,
    /// Beams per sector at the fine stage.
    pub kf: usize,
    /// Boundary offset in units of half a sector width (edge sweep only).
    pub offset_norm: Option<f64>,
}

/// A fully specified cell: scenario, pipeline settings and seed.
#[derive(Debug, Clone)]
pub struct Cell {
    pub key: CellKey,
    pub scenario: Scenario,
    pub ctx: PipelineContext,
    pub pipelines: Vec<PipelineId>,
    /// Realization seed; depends on noise level and geometry, not on budgets,
    /// so cells that differ only in beam budget see the same data.
    pub seed: u64,
    /// Stochastic CRB, `NaN` for noiseless cells.
    pub crb: f64,
}

fn settings(cfg: &ExperimentConfig, k_f: usize) -> PipelineSettings {
    PipelineSettings {
        n_rf_coarse: cfg.n_rf_coarse,
        k_f,
        coarse_solver: cfg.coarse_solver,
        fine_solver: cfg.fine_solver,
        eigen_map: cfg.eigen_map,
        grid_factor: cfg.grid_factor,
        ridge: cfg.ridge,
        selection: cfg.selection,
        w_sec: cfg.w_sec,
        timing: cfg.timing,
    }
}

fn realization_seed(base: u64, noise_key: f64, geometry: u64) -> u64 {
    derive_seed(derive_seed(base, noise_key.to_bits()), geometry)
}

fn make_cell(cfg: &ExperimentConfig, key: CellKey, scenario: Scenario, k_f: usize, geometry: u64) -> Result<Cell> {
    let noise_key = if cfg.n0.is_some() { scenario.n0 } else { key.asnr_db };
    let seed = realization_seed(cfg.seed, noise_key, geometry);
    let crb = if scenario.n0 > 0.0 { stochastic_crb(&scenario)?.crb } else { f64::NAN };
    let scenario = Scenario { seed, ..scenario };
    Ok(Cell { key, ctx: PipelineContext::new(cfg.m, settings(cfg, k_f))?, pipelines: cfg.pipelines.clone(), scenario, seed, crb })
}

/// Boundary offsets `-1 ..= 1` in units of half a sector width.
pub fn edge_offsets(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Expands a config into its cells, in output order.
pub fn plan_cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let base = |asnr: f64| Scenario::with_asnr(cfg.m, cfg.mu.clone(), cfg.powers.clone(), asnr, cfg.n_snap, cfg.seed);
    let key = |asnr_db, kf, offset_norm| CellKey { experiment: cfg.experiment, asnr_db, kf, offset_norm };
    let mut cells = Vec::new();
    match cfg.experiment {
        ExperimentKind::Asnr => {
            if let Some(n0) = cfg.n0 {
                let scen = Scenario::new(cfg.m, cfg.mu.clone(), cfg.powers.clone(), n0, cfg.n_snap, cfg.seed)?;
                let asnr = n0_to_asnr(n0, &cfg.powers);
                cells.push(make_cell(cfg, key(asnr, cfg.k_f, None), scen, cfg.k_f, 0)?);
            } else {
                for &asnr in &cfg.asnr_db {
                    cells.push(make_cell(cfg, key(asnr, cfg.k_f, None), base(asnr)?, cfg.k_f, 0)?);
                }
            }
        }
        ExperimentKind::Budget => {
            let d = cfg.mu.len();
            for &asnr in &cfg.budget_asnr_db {
                for &total in &cfg.budget_fine {
                    cells.push(make_cell(cfg, key(asnr, total / d, None), base(asnr)?, total / d, 0)?);
                }
            }
        }
        ExperimentKind::Kf => {
            for &asnr in &cfg.asnr_db {
                for &kf in &cfg.kf_values {
                    cells.push(make_cell(cfg, key(asnr, kf, None), base(asnr)?, kf, 0)?);
                }
            }
        }
        ExperimentKind::Edge => {
            let gamma = crate::combiner::DftCodebook::new(cfg.m)?.gamma().to_vec();
            let mu_edge = 0.5 * (gamma[cfg.edge_beam] + gamma[cfg.edge_beam + 1]);
            for &asnr in &cfg.edge_asnr_db {
                for (i, off) in edge_offsets(cfg.edge_offsets).into_iter().enumerate() {
                    let mu = vec![cfg.edge_mu1, mu_edge + off * cfg.w_sec / 2.0];
                    let scen = Scenario::with_asnr(cfg.m, mu, cfg.edge_powers.clone(), asnr, cfg.n_snap, cfg.seed)?;
                    cells.push(make_cell(cfg, key(asnr, cfg.k_f, Some(off)), scen, cfg.k_f, i as u64 + 1)?);
                }
            }
        }
    }
    Ok(cells)
}

/// Runs trials `range` of a cell on the current rayon pool; the output is in
/// trial order whatever the scheduling.
pub fn run_cell_trials(cell: &Cell, range: Range<u64>) -> Vec<TrialResult> {
    range
        .into_par_iter()
        .map(|t| run_trial(&cell.scenario, &cell.ctx, &cell.pipelines, cell.seed, t))
        .collect()
}

/// Aggregated result of one pipeline in one cell.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PipelineReport {
    pub key: CellKey,
    pub pipeline: PipelineId,
    pub metrics: MetricsReport,
    /// Median stage times over completed trials (timing enabled only).
    pub timing: Option<Timings>,
    /// Pearson correlation between per-trial LPA and per-trial RMS error.
    pub lpa_error_corr: f64,
    /// Aborted-trial counts by cause.
    pub abort_causes: BTreeMap<String, usize>,
}

fn median_timings(t: &[Timings]) -> Option<Timings> {
    let pick = |f: fn(&Timings) -> f64| median(&t.iter().map(f).collect::<Vec<_>>());
    Some(Timings { t_cov: pick(|t| t.t_cov)?, t_sel: pick(|t| t.t_sel)?, t_es: pick(|t| t.t_es)?, t_total: pick(|t| t.t_total)? })
}

/// Aggregates the trials of one cell (in trial order) per pipeline.
pub fn summarize_cell(cell: &Cell, trials: &[TrialResult], k_thr: f64) -> Result<Vec<PipelineReport>> {
    let mut out = Vec::with_capacity(cell.pipelines.len());
    for (j, &id) in cell.pipelines.iter().enumerate() {
        let per: Vec<_> = trials.iter().map(|t| &t.pipelines[j]).collect();
        if per.iter().any(|p| p.outcome.pipeline != id) {
            return Err(DoaError::InvalidArgument(format!("trial records are not aligned with pipeline {id}")));
        }
        let errors: Vec<_> = per.iter().map(|p| p.errors.clone()).collect();
        let metrics = MetricsReport::from_trials(&errors, cell.crb, k_thr)?;
        let done_timings: Vec<Timings> = per.iter().filter(|p| p.errors.errors.is_some()).filter_map(|p| p.outcome.timings).collect();
        let (lpa, err): (Vec<f64>, Vec<f64>) = per
            .iter()
            .filter_map(|p| Some((p.errors.lpa?.sigma_max_deg, trial_rms(p.errors.errors.as_ref()?))))
            .unzip();
        let mut abort_causes = BTreeMap::new();
        for p in &per {
            if p.errors.errors.is_none() {
                *abort_causes.entry(p.outcome.abort.unwrap_or("unscorable").to_string()).or_insert(0) += 1;
            }
        }
        out.push(PipelineReport {
            key: cell.key.clone(),
            pipeline: id,
            metrics,
            timing: median_timings(&done_timings),
            lpa_error_corr: if lpa.len() >= 2 { pearson(&lpa, &err) } else { f64::NAN },
            abort_causes,
        });
    }
    Ok(out)
}

/// Every report of one experiment run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub reports: Vec<PipelineReport>,
}

/// Builds the worker pool requested by the config.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| DoaError::InvalidArgument(format!("thread pool: {e}")))
}

/// Runs every cell of the configured experiment. `progress` is called after
/// each cell with its position and the cell count.
pub fn run_experiment(cfg: &ExperimentConfig, progress: &(dyn Fn(usize, usize, &CellKey) + Sync)) -> Result<ExperimentOutput> {
    let cells = plan_cells(cfg)?;
    let pool = thread_pool(cfg.threads)?;
    let mut reports = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let trials = pool.install(|| run_cell_trials(cell, 0..cfg.trials));
        reports.extend(summarize_cell(cell, &trials, cfg.k_thr)?);
        progress(i + 1, cells.len(), &cell.key);
    }
    Ok(ExperimentOutput { config: cfg.clone(), reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_symmetric() {
        let o = edge_offsets(41);
        assert_eq!(o.len(), 41);
        assert_eq!(o[0], -1.0);
        assert_eq!(o[20], 0.0);
        assert_eq!(o[40], 1.0);
    }

    #[test]
    fn budget_cells_share_realizations() {
        let cfg = ExperimentConfig::parse("harness.experiment = budget").unwrap();
        let cells = plan_cells(&cfg).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells.iter().map(|c| c.key.kf).collect::<Vec<_>>(), vec![2, 4, 2, 4]);
        assert_eq!(cells[0].seed, cells[1].seed);
        assert_ne!(cells[0].seed, cells[2].seed);
    }

    #[test]
    fn edge_geometry() {
        let cfg = ExperimentConfig::parse("harness.experiment = edge\nharness.edge_offsets = 3").unwrap();
        let cells = plan_cells(&cfg).unwrap();
        assert_eq!(cells.len(), 6);
        let mid = &cells[1].scenario;
        assert_eq!(mid.mu[0], -2.1);
        assert!(mid.mu[1].abs() < 1e-12);
        assert!((cells[2].scenario.mu[1] - cfg.w_sec / 2.0).abs() < 1e-12);
        assert_ne!(cells[0].seed, cells[1].seed);
    }

    #[test]
    fn small_sweep_runs() {
        let cfg = ExperimentConfig::parse("harness.asnr_db = 10\nharness.trials = 8\nharness.threads = 2").unwrap();
        let out = run_experiment(&cfg, &|_, _, _| {}).unwrap();
        assert_eq!(out.reports.len(), 5);
        for r in &out.reports {
            assert_eq!(r.metrics.trials, 8);
            assert!(r.metrics.rmse < 0.05, "{} {}", r.pipeline, r.metrics.rmse);
        }
    }
}
