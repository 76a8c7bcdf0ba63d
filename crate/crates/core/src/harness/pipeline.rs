//! The five compared pipelines and one paired Monte Carlo trial.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::array::{generate_snapshots, Scenario, SnapshotMatrix};
use crate::coarse::{coarse_estimate, InvarianceSolver};
use crate::combiner::{centro_symmetric_mask, noncentro_mask, project_to_beams, DftCodebook, SubarrayMask};
use crate::covfit::{fit_powers, reconstruct_signal_covariance, toeplitz_psd_project};
use crate::error::{DoaError, Result};
use crate::fine::{sparse_beamspace_esprit, EigenMap};
use crate::metrics::{lpa_degrees, matched_errors, TrialErrors};
use crate::rng::TrialStreams;
use crate::selection::{baseline_sectorization_select, oracle_select, sectorize, select_beams, SelectionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum PipelineId {
    /// Element-space ESPRIT on the centred subarray.
    CoarseCentro,
    /// Element-space ESPRIT on the leading subarray.
    CoarseNoncentro,
    /// Centred coarse stage, covariance fit, covariance-guided beams, fine ESPRIT.
    FineCovGuided,
    /// Leading-subarray coarse stage, fixed sector windows, fine ESPRIT.
    FineSectorization,
    /// Fine ESPRIT on the windows closest to the true frequencies.
    FineOracle,
}

impl PipelineId {
    pub const ALL: [PipelineId; 5] =
        [Self::CoarseCentro, Self::CoarseNoncentro, Self::FineCovGuided, Self::FineSectorization, Self::FineOracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CoarseCentro => "coarse-centro",
            Self::CoarseNoncentro => "coarse-noncentro",
            Self::FineCovGuided => "fine-cov",
            Self::FineSectorization => "fine-sect",
            Self::FineOracle => "fine-oracle",
        }
    }

    pub fn is_fine(self) -> bool {
        matches!(self, Self::FineCovGuided | Self::FineSectorization | Self::FineOracle)
    }
}

impl fmt::Display for PipelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for PipelineId {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "coarse-centro" | "coarsecentro" => Self::CoarseCentro,
            "coarse-noncentro" | "coarsenoncentro" => Self::CoarseNoncentro,
            "fine-cov" | "finecovguided" | "cov" => Self::FineCovGuided,
            "fine-sect" | "finesectorization" | "sect" => Self::FineSectorization,
            "fine-oracle" | "fineoracle" | "oracle" => Self::FineOracle,
            _ => return Err(DoaError::InvalidArgument(format!("unknown pipeline '{}'", s.trim()))),
        })
    }
}

/// Everything a pipeline needs besides the data.
#[derive(Debug, Clone)]
pub struct PipelineSettings {
    pub n_rf_coarse: usize,
    /// Beams per source at the fine stage.
    pub k_f: usize,
    pub coarse_solver: InvarianceSolver,
    pub fine_solver: InvarianceSolver,
    pub eigen_map: EigenMap,
    pub grid_factor: usize,
    pub ridge: f64,
    pub selection: SelectionParams,
    pub w_sec: f64,
    pub timing: bool,
}

/// Precomputed codebook and masks shared by all trials of a cell.
#[derive(Debug, Clone)]
pub struct PipelineContext {
    pub settings: PipelineSettings,
    pub codebook: DftCodebook,
    pub centro: SubarrayMask,
    pub noncentro: SubarrayMask,
}

impl PipelineContext {
    pub fn new(m: usize, settings: PipelineSettings) -> Result<Self> {
        Ok(Self {
            codebook: DftCodebook::new(m)?,
            centro: centro_symmetric_mask(m, settings.n_rf_coarse)?,
            noncentro: noncentro_mask(m, settings.n_rf_coarse)?,
            settings,
        })
    }
}

/// Stage wall-clock times in milliseconds.
///
/// `t_cov` is everything before beam selection (coarse stage and, for the
/// covariance-guided pipeline, the covariance fit); coarse-only pipelines
/// report their whole run there. `t_total` is measured separately around
/// the complete pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct Timings {
    pub t_cov: f64,
    pub t_sel: f64,
    pub t_es: f64,
    pub t_total: f64,
}

/// Lap timer that never touches the clock when disabled.
struct Laps {
    start: Option<Instant>,
    last: Option<Instant>,
}

impl Laps {
    fn new(enabled: bool) -> Self {
        let now = enabled.then(Instant::now);
        Self { start: now, last: now }
    }

    fn lap(&mut self) -> f64 {
        match self.last {
            Some(prev) => {
                let now = Instant::now();
                self.last = Some(now);
                (now - prev).as_secs_f64() * 1e3
            }
            None => 0.0,
        }
    }

    fn total(&self) -> f64 {
        self.start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3)
    }
}

/// Output of one pipeline on one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub pipeline: PipelineId,
    /// Estimates, or `None` if a stage failed.
    pub mu_hat: Option<Vec<f64>>,
    /// Fine-stage beams (empty for coarse pipelines).
    pub beams: Vec<usize>,
    pub timings: Option<Timings>,
    /// Short tag of the stage error that aborted the run.
    pub abort: Option<&'static str>,
}

/// Stable tag for an aborting stage error.
pub fn abort_tag(err: &DoaError) -> &'static str {
    match err {
        DoaError::RankDeficient { .. } => "rank-deficient",
        DoaError::TooManySources { .. } => "too-many-sources",
        DoaError::InsufficientPairs { .. } => "insufficient-pairs",
        DoaError::NoConvergence { .. } => "no-convergence",
        DoaError::AllWindowsSingular { .. } => "singular-windows",
        DoaError::InvalidBeamSet(_) => "invalid-beam-set",
        DoaError::SingularCombiner { .. } => "singular-combiner",
        _ => "other",
    }
}

fn run_stages(
    id: PipelineId,
    y: &SnapshotMatrix,
    mu_true: &[f64],
    ctx: &PipelineContext,
    laps: &mut Laps,
    t: &mut Timings,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let s = &ctx.settings;
    let d = mu_true.len();
    let cb = &ctx.codebook;
    let fine = |beams: Vec<usize>, laps: &mut Laps, t: &mut Timings| -> Result<(Vec<f64>, Vec<usize>)> {
        let y_b = project_to_beams(y, &beams, cb)?;
        let est = sparse_beamspace_esprit(&y_b, &beams, d, cb, s.fine_solver, s.eigen_map)?;
        t.t_es = laps.lap();
        Ok((est.mu, beams))
    };
    match id {
        PipelineId::CoarseCentro | PipelineId::CoarseNoncentro => {
            let mask = if id == PipelineId::CoarseCentro { &ctx.centro } else { &ctx.noncentro };
            let est = coarse_estimate(&mask.apply(y), d, s.coarse_solver)?;
            t.t_cov = laps.lap();
            Ok((est.mu, Vec::new()))
        }
        PipelineId::FineCovGuided => {
            let coarse = coarse_estimate(&ctx.centro.apply(y), d, s.coarse_solver)?;
            let fit = fit_powers(&coarse.r_fba, &coarse.mu, &ctx.centro, s.ridge)?;
            let r_s = reconstruct_signal_covariance(&coarse.mu, &fit.p_hat, cb.m())?;
            let proj = toeplitz_psd_project(&r_s, s.grid_factor * cb.m(), s.ridge)?;
            t.t_cov = laps.lap();
            let pools = sectorize(&coarse.mu, cb, s.w_sec, s.k_f)?;
            let sel = select_beams(&pools, &proj.matrix, cb, &s.selection)?;
            t.t_sel = laps.lap();
            fine(sel.union, laps, t)
        }
        PipelineId::FineSectorization => {
            let coarse = coarse_estimate(&ctx.noncentro.apply(y), d, s.coarse_solver)?;
            t.t_cov = laps.lap();
            let sel = baseline_sectorization_select(&coarse.mu, cb, s.k_f)?;
            t.t_sel = laps.lap();
            fine(sel.union, laps, t)
        }
        PipelineId::FineOracle => {
            let sel = oracle_select(mu_true, cb, s.k_f)?;
            t.t_sel = laps.lap();
            fine(sel.union, laps, t)
        }
    }
}

/// Runs one pipeline on element-space data.
pub fn run_pipeline(id: PipelineId, y: &SnapshotMatrix, mu_true: &[f64], ctx: &PipelineContext) -> PipelineOutcome {
    let mut laps = Laps::new(ctx.settings.timing);
    let mut t = Timings::default();
    let res = run_stages(id, y, mu_true, ctx, &mut laps, &mut t);
    t.t_total = laps.total();
    let timings = ctx.settings.timing.then_some(t);
    match res {
        Ok((mu_hat, beams)) => PipelineOutcome { pipeline: id, mu_hat: Some(mu_hat), beams, timings, abort: None },
        Err(e) => PipelineOutcome { pipeline: id, mu_hat: None, beams: Vec::new(), timings, abort: Some(abort_tag(&e)) },
    }
}

/// Scored pipeline result of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineTrial {
    pub outcome: PipelineOutcome,
    pub errors: TrialErrors,
}

/// All pipelines on one shared realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: u64,
    /// Digest of the snapshot matrix every pipeline consumed.
    pub y_checksum: u64,
    pub pipelines: Vec<PipelineTrial>,
}

/// SHA-256 prefix over the bit patterns of `Y`.
pub fn snapshot_checksum(y: &SnapshotMatrix) -> u64 {
    let mut h = Sha256::new();
    for z in y.data.iter() {
        h.update(z.re.to_bits().to_le_bytes());
        h.update(z.im.to_bits().to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

fn score(outcome: &PipelineOutcome, mu_true: &[f64], m: usize) -> TrialErrors {
    let Some(mu_hat) = &outcome.mu_hat else { return TrialErrors { errors: None, lpa: None } };
    // an estimate that cannot be matched or compared counts as aborted
    let errors = matched_errors(mu_hat, mu_true).ok();
    let lpa = errors.as_ref().and_then(|_| lpa_degrees(mu_true, mu_hat, m).ok());
    TrialErrors { errors, lpa }
}

/// Draws the realization for `(seed, trial)` and runs every pipeline on it.
pub fn run_trial(scenario: &Scenario, ctx: &PipelineContext, pipelines: &[PipelineId], seed: u64, trial: u64) -> TrialResult {
    let mut streams = TrialStreams::new(seed, trial);
    let y = generate_snapshots(scenario, &mut streams).y;
    let pipelines = pipelines
        .iter()
        .map(|&id| {
            let outcome = run_pipeline(id, &y, &scenario.mu, ctx);
            let errors = score(&outcome, &scenario.mu, scenario.m);
            PipelineTrial { outcome, errors }
        })
        .collect();
    TrialResult { trial, y_checksum: snapshot_checksum(&y), pipelines }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::default_sector_width;

    fn ctx(timing: bool) -> PipelineContext {
        let settings = PipelineSettings {
            n_rf_coarse: 12,
            k_f: 2,
            coarse_solver: InvarianceSolver::Tls,
            fine_solver: InvarianceSolver::Ls,
            eigen_map: EigenMap::Arctangent,
            grid_factor: 4,
            ridge: 1e-10,
            selection: SelectionParams::default(),
            w_sec: default_sector_width(32),
            timing,
        };
        PipelineContext::new(32, settings).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for id in PipelineId::ALL {
            assert_eq!(id.as_str().parse::<PipelineId>().unwrap(), id);
        }
        assert_eq!("FineCovGuided".parse::<PipelineId>().unwrap(), PipelineId::FineCovGuided);
        assert!("music".parse::<PipelineId>().is_err());
    }

    #[test]
    fn noiseless_trial_is_exact() {
        let scen = Scenario::new(32, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 0.0, 100, 1).unwrap();
        let res = run_trial(&scen, &ctx(false), &PipelineId::ALL, 1, 0);
        for p in &res.pipelines {
            let e = p.errors.errors.as_ref().unwrap_or_else(|| panic!("{:?} aborted", p.outcome));
            assert!(e.iter().all(|x| x.abs() < 1e-6), "{}: {e:?}", p.outcome.pipeline);
            assert!(p.outcome.timings.is_none());
        }
    }

    #[test]
    fn timings_are_consistent() {
        let scen = Scenario::with_asnr(32, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 6.0, 100, 1).unwrap();
        let res = run_trial(&scen, &ctx(true), &PipelineId::ALL, 9, 3);
        for p in &res.pipelines {
            let t = p.outcome.timings.unwrap();
            assert!(t.t_cov >= 0.0 && t.t_sel >= 0.0 && t.t_es >= 0.0);
            assert!(t.t_total + 1e-6 >= t.t_cov + t.t_sel + t.t_es, "{t:?}");
        }
        let again = run_trial(&scen, &ctx(false), &PipelineId::ALL, 9, 3);
        assert_eq!(again.y_checksum, res.y_checksum);
        for (a, b) in again.pipelines.iter().zip(&res.pipelines) {
            assert_eq!(a.outcome.mu_hat, b.outcome.mu_hat);
        }
    }
}
