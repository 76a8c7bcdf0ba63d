//! Projection onto Hermitian Toeplitz matrices with a non-negative
//! spectrum on a frequency grid.
//!
//! The matrix is parameterized by its first column,
//! `z = [t0, r_1..r_{M-1}, s_1..s_{M-1}]` with `t_l = r_l + j s_l` and
//! `R[i, k] = t_{i-k}`, `t_{-l} = conj(t_l)`. The grid constraint uses the
//! steering-vector quadratic form
//!
//! ```text
//! lambda(w) = a(w)^H R a(w) / M = t0 + 2 sum_l (1 - l/M) (r_l cos(l w) + s_l sin(l w))
//! ```
//!
//! which is non-negative at every `w` for any PSD matrix, so PSD Toeplitz
//! inputs are fixed points of the projection.
//!
//! With the isometric `vec_h`, the Frobenius objective is a diagonal QP in
//! `z`. Whitening by `H^{1/2}` turns it into a Euclidean projection onto the
//! polyhedral cone `{w : A w >= 0}`, whose dual is an NNLS problem solved
//! exactly by the active-set routine in [`super::nnls`].

use std::f64::consts::PI;

use num_complex::Complex64;

use super::nnls::lawson_hanson;
use crate::error::{DoaError, Result};
use crate::linalg::{fro, hermitian_eig_desc, CMat, RMat, RVec};

/// Passive-set insertion cap for the dual active-set solve.
pub const TOEPLITZ_MAX_ITER: usize = 50_000;

/// First-column parameters of a Hermitian Toeplitz matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzParams {
    m: usize,
    z: RVec,
}

impl ToeplitzParams {
    pub fn from_vector(m: usize, z: RVec) -> Self {
        assert!(m >= 1 && z.len() == 2 * m - 1, "expected {} parameters", 2 * m - 1);
        Self { m, z }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn as_vector(&self) -> &RVec {
        &self.z
    }

    /// `t_l` for lag `l >= 0`.
    pub fn lag(&self, l: usize) -> Complex64 {
        if l == 0 {
            Complex64::new(self.z[0], 0.0)
        } else {
            Complex64::new(self.z[l], self.z[self.m - 1 + l])
        }
    }

    pub fn first_column(&self) -> Vec<Complex64> {
        (0..self.m).map(|l| self.lag(l)).collect()
    }

    pub fn to_matrix(&self) -> CMat {
        let col = self.first_column();
        CMat::from_fn(self.m, self.m, |i, k| if i >= k { col[i - k] } else { col[k - i].conj() })
    }

    /// Least-squares Toeplitz fit (diagonal averaging) of a Hermitian matrix.
    pub fn average_of(r: &CMat) -> Self {
        let m = r.nrows();
        let h = gram_diagonal(m, 0.0);
        let q = correlate(r);
        Self::from_vector(m, q.component_div(&h))
    }

    /// `a(w)^H R a(w) / M`.
    pub fn tapered_spectrum(&self, omega: f64) -> f64 {
        let m = self.m as f64;
        let mut acc = self.z[0];
        for l in 1..self.m {
            let taper = 2.0 * (1.0 - l as f64 / m);
            let (s, c) = (l as f64 * omega).sin_cos();
            acc += taper * (self.z[l] * c + self.z[self.m - 1 + l] * s);
        }
        acc
    }
}

/// Uniform frequency grid `w_g = -pi + 2 pi g / G` on `[-pi, pi)`.
pub fn spectral_grid(points: usize) -> Vec<f64> {
    (0..points).map(|g| -PI + 2.0 * PI * g as f64 / points as f64).collect()
}

/// Diagonal of `H = 2 T^T T + ridge I` (`T^T T` is diagonal: `M` for `t0`,
/// `2 (M - l)` for `r_l` and `s_l`).
fn gram_diagonal(m: usize, ridge: f64) -> RVec {
    let mut h = RVec::zeros(2 * m - 1);
    h[0] = 2.0 * m as f64 + ridge;
    for l in 1..m {
        let w = 4.0 * (m - l) as f64 + ridge;
        h[l] = w;
        h[m - 1 + l] = w;
    }
    h
}

/// `q = 2 T^T vec_h(R)`.
fn correlate(r: &CMat) -> RVec {
    let m = r.nrows();
    let mut q = RVec::zeros(2 * m - 1);
    q[0] = 2.0 * (0..m).map(|i| r[(i, i)].re).sum::<f64>();
    for l in 1..m {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..m - l {
            // Hermitian average of the (k+l, k) and conj (k, k+l) entries
            let z = 0.5 * (r[(k + l, k)] + r[(k, k + l)].conj());
            re += z.re;
            im += z.im;
        }
        q[l] = 4.0 * re;
        q[m - 1 + l] = 4.0 * im;
    }
    q
}

/// Constraint matrix of `lambda(w_g) >= 0`, one row per grid point.
pub fn spectral_constraints(m: usize, grid: &[f64]) -> RMat {
    let mut a = RMat::zeros(grid.len(), 2 * m - 1);
    for (g, &w) in grid.iter().enumerate() {
        a[(g, 0)] = 1.0;
        for l in 1..m {
            let taper = 2.0 * (1.0 - l as f64 / m as f64);
            let (s, c) = (l as f64 * w).sin_cos();
            a[(g, l)] = taper * c;
            a[(g, m - 1 + l)] = taper * s;
        }
    }
    a
}

/// Output of [`toeplitz_psd_project`].
#[derive(Debug, Clone)]
pub struct ToeplitzProjection {
    pub params: ToeplitzParams,
    pub matrix: CMat,
    /// `|R - R_hat|_F^2` at the returned point.
    pub objective: f64,
    /// Largest KKT violation of the dual active-set solve.
    pub kkt_gap: f64,
    /// Smallest `lambda(w_g)` over the constraint grid.
    pub min_grid_spectrum: f64,
    /// Constraints with a strictly positive multiplier.
    pub active_constraints: usize,
}

impl ToeplitzProjection {
    /// Smallest eigenvalue of the projected matrix. The grid constraint does
    /// not certify exact PSD-ness, so this is reported as a diagnostic.
    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = hermitian_eig_desc(&self.matrix);
        *vals.last().unwrap()
    }
}

/// Projects a Hermitian matrix onto Hermitian Toeplitz matrices with
/// `lambda(w_g) >= 0` on `grid_points` uniform frequencies.
pub fn toeplitz_psd_project(r_hat: &CMat, grid_points: usize, ridge: f64) -> Result<ToeplitzProjection> {
    let m = r_hat.nrows();
    if r_hat.ncols() != m {
        return Err(DoaError::NotSquare { rows: m, cols: r_hat.ncols() });
    }
    if grid_points < 2 * m {
        return Err(DoaError::InvalidArgument(format!("grid of {grid_points} points is below 2M = {}", 2 * m)));
    }
    let h = gram_diagonal(m, ridge);
    let sqrt_h = h.map(f64::sqrt);
    let q = correlate(r_hat);
    let w0 = q.component_div(&sqrt_h);

    let grid = spectral_grid(grid_points);
    let a = spectral_constraints(m, &grid);
    // whitened constraint rows, A H^{-1/2}
    let mut a_w = a.clone();
    for mut row in a_w.row_iter_mut() {
        row.component_div_assign(&sqrt_h.transpose());
    }

    let (w, kkt_gap, active) = if (&a_w * &w0).iter().all(|&v| v >= 0.0) {
        (w0, 0.0, 0)
    } else {
        // dual: min_{nu >= 0} |A_w^T nu + w0|^2, primal w = w0 + A_w^T nu
        let at = a_w.transpose();
        let sol = lawson_hanson(&at, &(-&w0), TOEPLITZ_MAX_ITER).map_err(|e| match e {
            DoaError::NoConvergence { iterations, gap, best, .. } => {
                let nu = RVec::from_vec(best);
                let z = (&w0 + &at * nu).component_div(&sqrt_h);
                DoaError::NoConvergence {
                    solver: "toeplitz-psd projection",
                    iterations,
                    gap,
                    best: z.iter().copied().collect(),
                }
            }
            other => other,
        })?;
        let active = sol.x.iter().filter(|&&v| v > 0.0).count();
        (&w0 + at * sol.x, sol.kkt_gap, active)
    };

    let params = ToeplitzParams::from_vector(m, w.component_div(&sqrt_h));
    let matrix = params.to_matrix();
    let objective = fro(&(&matrix - r_hat)).powi(2);
    let min_grid_spectrum = (&a * params.as_vector()).min();
    Ok(ToeplitzProjection { params, matrix, objective, kkt_gap, min_grid_spectrum, active_constraints: active })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use crate::covfit::vech::{mat_h, vec_h, HermitianVec};

    fn outer(mu: f64, m: usize) -> CMat {
        let a = steering_vector(mu, m);
        &a * a.adjoint()
    }

    /// Builds `T` column by column from `vec_h` of the basis matrices.
    fn explicit_t(m: usize) -> RMat {
        let n = 2 * m - 1;
        let mut t = RMat::zeros(m * m, n);
        for i in 0..n {
            let mut e = RVec::zeros(n);
            e[i] = 1.0;
            let col = vec_h(&ToeplitzParams::from_vector(m, e).to_matrix()).into_vector();
            t.set_column(i, &col);
        }
        t
    }

    #[test]
    fn closed_form_qp_matches_explicit_design() {
        let m = 6;
        let t = explicit_t(m);
        let h = gram_diagonal(m, 0.0);
        let tt = t.transpose() * &t * 2.0;
        assert!((tt - RMat::from_diagonal(&h)).norm() < 1e-12);

        let r = outer(0.4, m) + outer(-1.3, m).scale(0.5) + CMat::from_fn(m, m, |i, j| Complex64::new(0.1 * (i * j) as f64, 0.03 * i as f64 - 0.07 * j as f64));
        let r = crate::linalg::hermitian_part(&r);
        let y = vec_h(&r).into_vector();
        assert!((t.transpose() * &y * 2.0 - correlate(&r)).norm() < 1e-12);
        let back = mat_h(&HermitianVec::from_vector(m, t * ToeplitzParams::average_of(&r).as_vector().clone()));
        assert!(fro(&(back - ToeplitzParams::average_of(&r).to_matrix())) < 1e-12);
    }

    #[test]
    fn spectrum_is_steering_quadratic_form() {
        let m = 7;
        let r = outer(0.9, m).scale(2.0) + outer(-0.2, m);
        let p = ToeplitzParams::average_of(&r);
        for w in [-3.0, -1.1, 0.0, 0.4, 2.7] {
            let a = steering_vector(w, m);
            let quad = (a.adjoint() * &r * &a)[(0, 0)].re / m as f64;
            assert!((p.tapered_spectrum(w) - quad).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_is_fixed() {
        let eye = CMat::identity(8, 8);
        let out = toeplitz_psd_project(&eye, 32, 0.0).unwrap();
        assert!(fro(&(out.matrix - eye)) < 1e-14);
    }

    #[test]
    fn rank_one_steering_outer_product_is_fixed() {
        for mu in [-2.9, -0.7, 0.0, 0.5, 1.9, 3.1] {
            let r = outer(mu, 32);
            let out = toeplitz_psd_project(&r, 128, 1e-10).unwrap();
            assert!(fro(&(&out.matrix - &r)) < 1e-7, "mu={mu}");
            assert!(out.min_grid_spectrum >= -1e-8);
        }
    }

    #[test]
    fn indefinite_input_becomes_feasible() {
        let m = 8;
        let mut z = RVec::zeros(2 * m - 1);
        z[1] = 1.0;
        let r = ToeplitzParams::from_vector(m, z).to_matrix();
        let out = toeplitz_psd_project(&r, 4 * m, 1e-10).unwrap();
        assert!(out.min_grid_spectrum >= -1e-8);
        assert!(out.active_constraints > 0);
        assert!(out.kkt_gap < 1e-9);
        assert!(out.objective > 0.0);
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(toeplitz_psd_project(&CMat::identity(4, 4), 7, 0.0).is_err());
    }
}
