//! Accuracy metrics: estimate matching, RMSE, the stochastic CRB, CRB-scaled
//! failure rates with Wilson intervals, principal angles and ECDFs.

use itertools::Itertools;
use serde::Serialize;

use crate::array::{manifold, steering_derivative, theoretical_covariance, Scenario};
use crate::error::{DoaError, Result};
use crate::linalg::{thin_svd, wrap_angle, CMat, RMat};

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z95: f64 = 1.959964;

/// Largest source count accepted by the exhaustive matcher.
pub const MAX_MATCH_SOURCES: usize = 8;

/// Assignment minimizing the summed squared wrapped error;
/// `perm[k]` is the estimate matched to `mu_true[k]`.
pub fn match_estimates(mu_hat: &[f64], mu_true: &[f64]) -> Result<Vec<usize>> {
    let d = mu_true.len();
    if mu_hat.len() != d {
        return Err(DoaError::InvalidArgument(format!("{} estimates for {d} sources", mu_hat.len())));
    }
    if d > MAX_MATCH_SOURCES {
        return Err(DoaError::InvalidArgument(format!("matching {d} sources exceeds the limit of {MAX_MATCH_SOURCES}")));
    }
    let cost = |perm: &[usize]| -> f64 { perm.iter().zip(mu_true).map(|(&i, &t)| wrap_angle(mu_hat[i] - t).powi(2)).sum() };
    let mut best: (Vec<usize>, f64) = ((0..d).collect(), f64::INFINITY);
    for perm in (0..d).permutations(d) {
        let c = cost(&perm);
        if c < best.1 {
            best = (perm, c);
        }
    }
    Ok(best.0)
}

/// Wrapped errors `mu_hat[perm[k]] - mu_true[k]` after optimal matching.
pub fn matched_errors(mu_hat: &[f64], mu_true: &[f64]) -> Result<Vec<f64>> {
    let perm = match_estimates(mu_hat, mu_true)?;
    Ok(perm.iter().zip(mu_true).map(|(&i, &t)| wrap_angle(mu_hat[i] - t)).collect())
}

/// `sqrt(mean_trials mean_k e^2)`.
pub fn rmse(trials: &[Vec<f64>]) -> Result<f64> {
    if trials.is_empty() {
        return Err(DoaError::InvalidArgument("RMSE over zero trials".into()));
    }
    let total: f64 = trials.iter().map(|e| e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sum();
    Ok((total / trials.len() as f64).sqrt())
}

/// Stochastic CRB summary `tr(J^-1) / d` and the Fisher matrix.
#[derive(Debug, Clone)]
pub struct Crb {
    pub crb: f64,
    pub fim: RMat,
}

/// Closed-form stochastic FIM for the frequencies alone, with source powers
/// and noise variance known:
/// `J_ij = 2 N p_i p_j Re(E_ij conj(Q_ij) + F_ij F_ji)` with
/// `Q = A^H R^-1 A`, `E = D^H R^-1 D`, `F = D^H R^-1 A`, `D = dA/dmu`.
pub fn stochastic_crb(scenario: &Scenario) -> Result<Crb> {
    if !(scenario.n0 > 0.0) {
        return Err(DoaError::InvalidArgument("the CRB needs a positive noise variance".into()));
    }
    let m = scenario.m;
    let d = scenario.d();
    let a = manifold(&scenario.mu, m)?;
    let dm = CMat::from_fn(m, d, |i, k| steering_derivative(scenario.mu[k], m)[i]);
    let r_inv = theoretical_covariance(scenario).cholesky().ok_or(DoaError::SingularFim)?.inverse();
    let q = a.adjoint() * &r_inv * &a;
    let e = dm.adjoint() * &r_inv * &dm;
    let f = dm.adjoint() * &r_inv * &a;
    let n = scenario.n_snap as f64;
    let p = &scenario.powers;
    let fim = RMat::from_fn(d, d, |i, j| 2.0 * n * p[i] * p[j] * (e[(i, j)] * q[(i, j)].conj() + f[(i, j)] * f[(j, i)]).re);
    let inv = fim.clone().cholesky().ok_or(DoaError::SingularFim)?.inverse();
    let crb = inv.trace() / d as f64;
    if !(crb > 0.0) || !crb.is_finite() {
        return Err(DoaError::SingularFim);
    }
    Ok(Crb { crb, fim })
}

/// `10 log10(rmse / sqrt(crb))`.
pub fn gap_to_crb_db(rmse: f64, crb: f64) -> Result<f64> {
    if !(rmse > 0.0 && crb > 0.0) {
        return Err(DoaError::InvalidArgument(format!("gap needs positive inputs, got rmse={rmse}, crb={crb}")));
    }
    Ok(10.0 * (rmse / crb.sqrt()).log10())
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// CRB-scaled failure statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureStats {
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
    pub failures: usize,
    pub trials: usize,
}

/// Fraction of trials whose largest error exceeds `k_thr sqrt(crb)`, with a
/// Wilson interval at normal quantile `z`.
pub fn failure_stats(max_errors: &[f64], crb: f64, k_thr: f64, z: f64) -> Result<FailureStats> {
    if max_errors.is_empty() {
        return Err(DoaError::InvalidArgument("failure rate over zero trials".into()));
    }
    if !(k_thr > 0.0) {
        return Err(DoaError::InvalidArgument(format!("threshold factor must be positive, got {k_thr}")));
    }
    let thr = k_thr * crb.sqrt();
    let failures = max_errors.iter().filter(|&&e| e > thr).count();
    let trials = max_errors.len();
    let (lo, hi) = wilson_interval(failures, trials, z);
    Ok(FailureStats { rate: failures as f64 / trials as f64, lo, hi, failures, trials })
}

/// Principal-angle summary between true and estimated manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lpa {
    /// `arccos(sigma_max)` in degrees, the literal largest-principal-angle formula.
    pub sigma_max_deg: f64,
    /// `arccos(sigma_min)` in degrees, the largest principal angle proper.
    pub sigma_min_deg: f64,
}

fn orthonormal_basis(mu: &[f64], m: usize) -> Result<CMat> {
    let a = manifold(mu, m)?;
    let svd = thin_svd(&a);
    if svd.s.last().copied().unwrap_or(0.0) <= 1e-12 * svd.s[0] {
        return Err(DoaError::RankDeficient { ratio: svd.s.last().unwrap() / svd.s[0] });
    }
    Ok(svd.u)
}

/// Principal angles between `span A(mu_true)` and `span A(mu_hat)`.
pub fn lpa_degrees(mu_true: &[f64], mu_hat: &[f64], m: usize) -> Result<Lpa> {
    let u_true = orthonormal_basis(mu_true, m)?;
    let u_hat = orthonormal_basis(mu_hat, m)?;
    let s = thin_svd(&(u_true.adjoint() * u_hat)).s;
    let angle = |c: f64| c.clamp(-1.0, 1.0).acos().to_degrees();
    Ok(Lpa { sigma_max_deg: angle(s[0]), sigma_min_deg: angle(*s.last().unwrap()) })
}

/// Right-continuous ECDF as `(value, F(value))` steps, one per distinct value.
pub fn ecdf(errors: &[f64]) -> Result<Vec<(f64, f64)>> {
    if errors.is_empty() {
        return Err(DoaError::InvalidArgument("ECDF of an empty sample".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => out.push((v, frac)),
        }
    }
    Ok(out)
}

/// Evaluates a step ECDF at `x`.
pub fn ecdf_at(steps: &[(f64, f64)], x: f64) -> f64 {
    match steps.partition_point(|s| s.0 <= x) {
        0 => 0.0,
        k => steps[k - 1].1,
    }
}

/// `true` when `F_a(x) >= F_b(x)` at every point of the merged support.
pub fn stochastically_dominates(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    a.iter().chain(b).all(|&(x, _)| ecdf_at(a, x) >= ecdf_at(b, x))
}

/// Pearson correlation coefficient (`NaN` for constant inputs).
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Median of a sample (mean of the two middle values for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Per-trial record consumed by [`MetricsReport::from_trials`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialErrors {
    /// Matched wrapped errors, or `None` when a stage aborted.
    pub errors: Option<Vec<f64>>,
    pub lpa: Option<Lpa>,
}

/// Aggregate statistics of one pipeline in one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rmse: f64,
    pub crb_sqrt: f64,
    pub gap_db: f64,
    pub fail_rate: f64,
    pub fail_lo: f64,
    pub fail_hi: f64,
    pub lpa_p50_deg: f64,
    pub lpa_min_p50_deg: f64,
    /// ECDF of the per-trial RMS error over sources.
    pub ecdf: Vec<(f64, f64)>,
    pub trials: usize,
    pub aborted: usize,
}

impl MetricsReport {
    /// Aggregates completed trials; aborted trials are only counted.
    pub fn from_trials(trials: &[TrialErrors], crb: f64, k_thr: f64) -> Result<Self> {
        let done: Vec<&Vec<f64>> = trials.iter().filter_map(|t| t.errors.as_ref()).collect();
        let aborted = trials.len() - done.len();
        if done.is_empty() {
            return Ok(Self {
                rmse: f64::NAN,
                crb_sqrt: crb.sqrt(),
                gap_db: f64::NAN,
                fail_rate: f64::NAN,
                fail_lo: f64::NAN,
                fail_hi: f64::NAN,
                lpa_p50_deg: f64::NAN,
                lpa_min_p50_deg: f64::NAN,
                ecdf: Vec::new(),
                trials: trials.len(),
                aborted,
            });
        }
        let owned: Vec<Vec<f64>> = done.iter().map(|e| e.to_vec()).collect();
        let rmse = rmse(&owned)?;
        // without a usable bound (noiseless cells) the CRB-relative columns are undefined
        let has_crb = crb > 0.0 && crb.is_finite();
        let gap_db = match (has_crb, rmse > 0.0) {
            (false, _) => f64::NAN,
            (true, true) => gap_to_crb_db(rmse, crb)?,
            (true, false) => f64::NEG_INFINITY,
        };
        let max_err: Vec<f64> = done.iter().map(|e| e.iter().fold(0.0f64, |m, x| m.max(x.abs()))).collect();
        let fail = if has_crb {
            failure_stats(&max_err, crb, k_thr, WILSON_Z95)?
        } else {
            FailureStats { rate: f64::NAN, lo: f64::NAN, hi: f64::NAN, failures: 0, trials: max_err.len() }
        };
        let per_trial: Vec<f64> = done.iter().map(|e| trial_rms(e)).collect();
        let lpas: Vec<Lpa> = trials.iter().filter_map(|t| t.lpa).collect();
        let lpa_max: Vec<f64> = lpas.iter().map(|l| l.sigma_max_deg).collect();
        let lpa_min: Vec<f64> = lpas.iter().map(|l| l.sigma_min_deg).collect();
        Ok(Self {
            rmse,
            crb_sqrt: crb.sqrt(),
            gap_db,
            fail_rate: fail.rate,
            fail_lo: fail.lo,
            fail_hi: fail.hi,
            lpa_p50_deg: median(&lpa_max).unwrap_or(f64::NAN),
            lpa_min_p50_deg: median(&lpa_min).unwrap_or(f64::NAN),
            ecdf: ecdf(&per_trial)?,
            trials: trials.len(),
            aborted,
        })
    }
}

/// Per-trial RMS error over sources.
pub fn trial_rms(errors: &[f64]) -> f64 {
    (errors.iter().map(|x| x * x).sum::<f64>() / errors.len() as f64).sqrt()
}
