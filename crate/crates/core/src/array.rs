//! Uniform linear array data model: steering vectors, manifolds, snapshot
//! synthesis and the theoretical covariance `A diag(p) A^H + N0 I`.
//!
//! Directions are handled purely as spatial frequencies `mu` (radians); the
//! physical angle never enters the computation.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{DoaError, Result};
use crate::linalg::{wrap_angle, CMat, CVec};
use crate::rng::TrialStreams;

/// Two spatial frequencies closer than this (after wrapping) are treated as
/// the same direction.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// One simulated acquisition: geometry, sources, noise and snapshot count.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Antenna count `M`.
    pub m: usize,
    /// True spatial frequencies, radians.
    pub mu: Vec<f64>,
    /// Linear source powers `p_k`.
    pub powers: Vec<f64>,
    /// Noise variance `N0`.
    pub n0: f64,
    /// Snapshot count.
    pub n_snap: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(m: usize, mu: Vec<f64>, powers: Vec<f64>, n0: f64, n_snap: usize, seed: u64) -> Result<Self> {
        let s = Self { m, mu, powers, n0, n_snap, seed };
        s.validate()?;
        Ok(s)
    }

    /// Builds a scenario whose noise variance is derived from an array SNR.
    pub fn with_asnr(m: usize, mu: Vec<f64>, powers: Vec<f64>, asnr_db: f64, n_snap: usize, seed: u64) -> Result<Self> {
        let n0 = asnr_to_n0(asnr_db, &powers)?;
        Self::new(m, mu, powers, n0, n_snap, seed)
    }

    /// Number of sources `d`.
    pub fn d(&self) -> usize {
        self.mu.len()
    }

    /// Array SNR in dB; infinite when noiseless.
    pub fn asnr_db(&self) -> f64 {
        n0_to_asnr(self.n0, &self.powers)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mu.len();
        if self.m == 0 {
            return Err(DoaError::InvalidScenario("antenna count must be positive".into()));
        }
        if d == 0 {
            return Err(DoaError::InvalidScenario("at least one source is required".into()));
        }
        if d > self.m {
            return Err(DoaError::InvalidScenario(format!("d={d} exceeds M={}", self.m)));
        }
        if self.powers.len() != d {
            return Err(DoaError::InvalidScenario(format!(
                "{} powers given for {d} sources",
                self.powers.len()
            )));
        }
        if let Some(p) = self.powers.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(DoaError::InvalidScenario(format!("source power {p} is not strictly positive")));
        }
        if !(self.n0 >= 0.0) || !self.n0.is_finite() {
            return Err(DoaError::InvalidScenario(format!("noise variance {} is negative", self.n0)));
        }
        if self.n_snap == 0 {
            return Err(DoaError::InvalidScenario("snapshot count must be positive".into()));
        }
        check_distinct(&self.mu)?;
        Ok(())
    }
}

fn check_distinct(mu: &[f64]) -> Result<()> {
    for (i, a) in mu.iter().enumerate() {
        if !a.is_finite() {
            return Err(DoaError::InvalidScenario(format!("spatial frequency {a} is not finite")));
        }
        for b in &mu[i + 1..] {
            if wrap_angle(a - b).abs() < DUPLICATE_TOL {
                return Err(DoaError::DuplicateFrequency(*a));
            }
        }
    }
    Ok(())
}

/// Whether a snapshot matrix holds antenna outputs or beam outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Element,
    Beam,
}

/// Complex data with one row per spatial channel and one column per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: CMat,
    pub kind: ChannelKind,
}

impl SnapshotMatrix {
    pub fn new(data: CMat, kind: ChannelKind) -> Self {
        Self { data, kind }
    }

    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }

    /// Sample covariance with 1/N normalization.
    pub fn sample_covariance(&self) -> CMat {
        sample_covariance(&self.data)
    }
}

/// `(1/N) Y Y^H`.
pub fn sample_covariance(y: &CMat) -> CMat {
    let n = y.ncols().max(1) as f64;
    (y * y.adjoint()).unscale(n)
}

/// Element-space data together with the source and noise draws that made it.
#[derive(Debug, Clone)]
pub struct Realization {
    pub y: SnapshotMatrix,
    pub signals: CMat,
    pub noise: CMat,
}

/// `a(mu)` with entry `m` (0-based) equal to `exp(j m mu)`.
pub fn steering_vector(mu: f64, m: usize) -> CVec {
    DVector::from_fn(m, |i, _| Complex64::from_polar(1.0, i as f64 * mu))
}

/// Derivative of [`steering_vector`] with respect to `mu`.
pub fn steering_derivative(mu: f64, m: usize) -> CVec {
    DVector::from_fn(m, |i, _| Complex64::new(0.0, i as f64) * Complex64::from_polar(1.0, i as f64 * mu))
}

/// `A(mu) = [a(mu_1), ..., a(mu_d)]`; rejects repeated frequencies.
pub fn manifold(mu: &[f64], m: usize) -> Result<CMat> {
    check_distinct(mu)?;
    Ok(manifold_unchecked(mu, m))
}

pub(crate) fn manifold_unchecked(mu: &[f64], m: usize) -> CMat {
    CMat::from_fn(m, mu.len(), |i, k| Complex64::from_polar(1.0, i as f64 * mu[k]))
}

/// Steering matrix restricted to the given element positions (0-based).
pub fn manifold_at(mu: &[f64], positions: &[usize]) -> CMat {
    CMat::from_fn(positions.len(), mu.len(), |i, k| {
        Complex64::from_polar(1.0, positions[i] as f64 * mu[k])
    })
}

/// Noise variance that yields the requested array SNR,
/// `N0 = sum(p) / 10^(asnr/10)`.
pub fn asnr_to_n0(asnr_db: f64, powers: &[f64]) -> Result<f64> {
    if powers.is_empty() {
        return Err(DoaError::EmptyPowers);
    }
    if powers.iter().any(|p| !(*p > 0.0)) {
        return Err(DoaError::InvalidArgument("powers must be strictly positive".into()));
    }
    let total: f64 = powers.iter().sum();
    Ok(total / 10f64.powf(asnr_db / 10.0))
}

/// Inverse of [`asnr_to_n0`].
pub fn n0_to_asnr(n0: f64, powers: &[f64]) -> f64 {
    let total: f64 = powers.iter().sum();
    10.0 * (total / n0).log10()
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Draws `Y = A S + N` with circular Gaussian sources of covariance
/// `diag(p)` and white noise of variance `N0`.
///
/// Sources are drawn column-major from the signal stream, noise from the
/// noise stream, so a fixed seed reproduces the same matrices bit for bit.
pub fn generate_snapshots(scenario: &Scenario, streams: &mut TrialStreams) -> Realization {
    let d = scenario.d();
    let n = scenario.n_snap;
    let m = scenario.m;
    let mut signals = CMat::zeros(d, n);
    for col in 0..n {
        for k in 0..d {
            signals[(k, col)] = complex_gaussian(&mut streams.signal, scenario.powers[k]);
        }
    }
    let mut noise = CMat::zeros(m, n);
    if scenario.n0 > 0.0 {
        for col in 0..n {
            for row in 0..m {
                noise[(row, col)] = complex_gaussian(&mut streams.noise, scenario.n0);
            }
        }
    }
    let a = manifold_unchecked(&scenario.mu, m);
    let y = &a * &signals + &noise;
    Realization {
        y: SnapshotMatrix::new(y, ChannelKind::Element),
        signals,
        noise,
    }
}

/// `A diag(p) A^H + N0 I`.
pub fn theoretical_covariance(scenario: &Scenario) -> CMat {
    let a = manifold_unchecked(&scenario.mu, scenario.m);
    let p = DVector::from_iterator(scenario.d(), scenario.powers.iter().map(|&x| Complex64::new(x, 0.0)));
    let ap = CMat::from_fn(scenario.m, scenario.d(), |i, k| a[(i, k)] * p[k]);
    let mut r = &ap * a.adjoint();
    for i in 0..scenario.m {
        r[(i, i)] += Complex64::new(scenario.n0, 0.0);
    }
    r
}
