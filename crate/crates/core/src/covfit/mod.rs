//! Structured covariance fitting: source powers and noise level by NNLS on
//! the coarse subarray, full-aperture reconstruction, and Toeplitz–PSD
//! projection.

pub mod nnls;
pub mod toeplitz;
pub mod vech;

use num_complex::Complex64;

use crate::array::manifold_at;
use crate::combiner::SubarrayMask;
use crate::error::{DoaError, Result};
use crate::linalg::{CMat, RMat};

pub use nnls::{kkt_violation, lawson_hanson, nnls_solve, NnlsSolution};
pub use toeplitz::{spectral_grid, toeplitz_psd_project, ToeplitzParams, ToeplitzProjection};
pub use vech::{mat_h, vec_h, HermitianVec};

/// Diagonal ridge used by both quadratic programs.
pub const DEFAULT_RIDGE: f64 = 1e-10;

/// Non-negative power and noise estimates.
#[derive(Debug, Clone)]
pub struct PowerFit {
    pub p_hat: Vec<f64>,
    pub n0_hat: f64,
    /// `|y - C x|^2` at the solution.
    pub residual: f64,
    pub kkt_gap: f64,
}

/// Design matrix `C = [vec_h(a a^H) for each estimate, vec_h(I)]` on the
/// subarray rows of `mask`.
pub fn build_power_design(mu_coarse: &[f64], mask: &SubarrayMask) -> Result<RMat> {
    if mu_coarse.is_empty() {
        return Err(DoaError::InvalidArgument("power design needs at least one frequency".into()));
    }
    let n = mask.len();
    let a = manifold_at(mu_coarse, mask.indices());
    let mut c = RMat::zeros(n * n, mu_coarse.len() + 1);
    for k in 0..mu_coarse.len() {
        let col = a.column(k);
        let outer = &col * col.adjoint();
        c.set_column(k, vec_h(&outer).as_vector());
    }
    c.set_column(mu_coarse.len(), vec_h(&CMat::identity(n, n)).as_vector());
    Ok(c)
}

/// Fits `R_fba ~ A diag(p) A^H + N0 I` over `p >= 0, N0 >= 0`.
pub fn fit_powers(r_fba: &CMat, mu_coarse: &[f64], mask: &SubarrayMask, ridge: f64) -> Result<PowerFit> {
    if r_fba.nrows() != mask.len() || r_fba.ncols() != mask.len() {
        return Err(DoaError::InvalidArgument(format!(
            "covariance is {}x{}, mask has {} rows",
            r_fba.nrows(),
            r_fba.ncols(),
            mask.len()
        )));
    }
    let c = build_power_design(mu_coarse, mask)?;
    let y = vec_h(r_fba).into_vector();
    let sol = nnls_solve(&c, &y, ridge)?;
    let d = mu_coarse.len();
    Ok(PowerFit {
        p_hat: sol.x.iter().take(d).copied().collect(),
        n0_hat: sol.x[d],
        residual: sol.residual_sq,
        kkt_gap: sol.kkt_gap,
    })
}

/// `A(mu) diag(p) A(mu)^H` on the full `m`-element array.
pub fn reconstruct_signal_covariance(mu: &[f64], p_hat: &[f64], m: usize) -> Result<CMat> {
    if mu.len() != p_hat.len() {
        return Err(DoaError::InvalidArgument("frequency and power counts differ".into()));
    }
    if let Some(p) = p_hat.iter().find(|p| !(**p >= 0.0)) {
        return Err(DoaError::InvalidArgument(format!("negative power {p}")));
    }
    let positions: Vec<usize> = (0..m).collect();
    let a = manifold_at(mu, &positions);
    let mut scaled = a.clone();
    for (k, &p) in p_hat.iter().enumerate() {
        scaled.column_mut(k).scale_mut(p);
    }
    let mut r = scaled * a.adjoint();
    // exact Hermitian symmetry for the downstream real parameterization
    for i in 0..m {
        r[(i, i)] = Complex64::new(r[(i, i)].re, 0.0);
        for j in i + 1..m {
            r[(j, i)] = r[(i, j)].conj();
        }
    }
    Ok(r)
}
