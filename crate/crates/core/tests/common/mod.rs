//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use beamspace_doa::array::{steering_vector, theoretical_covariance, Scenario};
use beamspace_doa::combiner::DftCodebook;
use beamspace_doa::covfit::ToeplitzParams;
use beamspace_doa::linalg::{CMat, RMat, RVec};
use beamspace_doa::selection::{score_window, SectorPools, SelectionParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `sum_k p_k a(mu_k) a(mu_k)^H + sigma I`.
pub fn toeplitz_psd(m: usize, mu: &[f64], p: &[f64], sigma: f64) -> CMat {
    let mut r = CMat::identity(m, m).scale(sigma);
    for (&mu, &p) in mu.iter().zip(p) {
        let a = steering_vector(mu, m);
        r += (&a * a.adjoint()).scale(p);
    }
    r
}

pub fn random_hermitian(m: usize, rng: &mut ChaCha8Rng) -> CMat {
    let a = CMat::from_fn(m, m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()).unscale(2.0)
}

pub fn random_wishart(m: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMat {
    let a = CMat::from_fn(m, rank, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    &a * a.adjoint()
}

/// Frequencies in `[lo, hi]` pairwise at least `sep` apart.
pub fn separated(d: usize, lo: f64, hi: f64, sep: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut mu: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
        mu.sort_by(f64::total_cmp);
        if mu.windows(2).all(|w| w[1] - w[0] >= sep) {
            return mu;
        }
    }
}

// ---- Toeplitz projection: dual projected gradient -------------------------

/// Basis matrices of Hermitian Toeplitz matrices in the first-column layout.
fn toeplitz_basis(m: usize) -> Vec<CMat> {
    (0..2 * m - 1)
        .map(|i| {
            let mut e = RVec::zeros(2 * m - 1);
            e[i] = 1.0;
            ToeplitzParams::from_vector(m, e).to_matrix()
        })
        .collect()
}

fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Minimum of `|T(z) - R|_F^2` subject to `a(w)^H T(z) a(w) >= 0` on the
/// grid, by accelerated projected gradient ascent on the dual.
/// Returns `(objective, matrix, min grid value)`.
pub fn toeplitz_projection_oracle(r: &CMat, grid: &[f64], iters: usize) -> (f64, CMat, f64) {
    let m = r.nrows();
    let basis = toeplitz_basis(m);
    let n = basis.len();
    // f(z) = z^T Q z - 2 b^T z + const
    let q = RMat::from_fn(n, n, |i, j| inner(&basis[i], &basis[j]));
    let b = RVec::from_fn(n, |i, _| inner(&basis[i], r));
    let cons = RMat::from_fn(grid.len(), n, |g, i| {
        let a = steering_vector(grid[g], m);
        (a.adjoint() * &basis[i] * &a)[(0, 0)].re / m as f64
    });
    let q_inv = q.clone().try_inverse().expect("Toeplitz Gram is invertible");
    // z(nu) = Q^-1 (b + C^T nu / 2); the dual gradient is -C z(nu)
    let z_of = |nu: &RVec| &q_inv * (&b + cons.transpose() * nu * 0.5);
    let k = &cons * &q_inv * cons.transpose() * 0.5;
    let lip = SymmetricEigen::new(k.clone()).eigenvalues.max();
    let step = 1.0 / lip;

    let mut nu = RVec::zeros(grid.len());
    let mut y = nu.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let g = &cons * z_of(&y);
        let next = (&y - g * step).map(|v| v.max(0.0));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = &next + (&next - &nu) * ((t - 1.0) / t_next);
        nu = next;
        t = t_next;
    }
    let z = z_of(&nu);
    let mat = ToeplitzParams::from_vector(m, z.clone()).to_matrix();
    let obj = (&mat - r).iter().map(|x| x.norm_sqr()).sum();
    (obj, mat, (&cons * z).min())
}

// ---- Selection brute force ------------------------------------------------

/// Exhaustive search over every window of every sector with the documented
/// total order: score desc, cond^2 asc, distance to the pool centre asc,
/// start asc.
pub fn brute_force_windows(pools: &SectorPools, r: &CMat, cb: &DftCodebook, params: &SelectionParams) -> Option<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for s in &pools.sectors {
        let len = s.hi - s.lo + 1;
        let k = s.budget.clamp(2, len);
        let pool_center = (s.lo + s.hi) as f64 / 2.0;
        let mut cands: Vec<(usize, f64, f64, f64)> = Vec::new();
        for start in s.lo..=s.hi + 1 - k {
            let window: Vec<usize> = (start..start + k).collect();
            if let Some(sc) = score_window(&window, r, cb, params) {
                let off = (start as f64 + (k - 1) as f64 / 2.0 - pool_center).abs();
                cands.push((start, sc.score, sc.cond2, off));
            }
        }
        cands.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then(a.2.partial_cmp(&b.2).unwrap_or(Ordering::Equal))
                .then(a.3.partial_cmp(&b.3).unwrap_or(Ordering::Equal))
                .then(a.0.cmp(&b.0))
        });
        let best = cands.first()?;
        out.push((best.0..best.0 + k).collect());
    }
    Some(out)
}

/// Capture score from its definition with a dense inverse and the
/// singular values of the window Gram matrix.
pub fn reference_score(window: &[usize], r: &CMat, cb: &DftCodebook, params: &SelectionParams) -> (f64, f64, f64) {
    let k = window.len();
    let b = cb.columns(window);
    let g = b.adjoint() * &b;
    let sv = g.clone().singular_values();
    let cond2 = (sv.max() / sv.min()).powi(2);
    let inv = (g + CMat::identity(k, k).scale(params.gamma)).try_inverse().unwrap();
    let cap = (inv * b.adjoint() * r * b).trace().re;
    (cap / (1.0 + params.alpha * cond2), cap, cond2)
}

// ---- Dense beamspace ESPRIT ----------------------------------------------

/// Standard beamspace ESPRIT over one contiguous block of beams starting at
/// `k0`: dense `(K-1) x K` half-angle selection matrices, signal subspace
/// from the eigenvectors of `X X^T`, QR least squares and
/// `mu = 2 atan(Re lambda)`.
pub fn dense_beamspace_esprit(y_b: &CMat, k0: usize, d: usize, cb: &DftCodebook) -> Vec<f64> {
    let k = y_b.nrows();
    let n = y_b.ncols();
    let x = RMat::from_fn(k, 2 * n, |i, j| {
        let z = y_b[(i, j % n)];
        std::f64::consts::SQRT_2 * if j < n { z.re } else { z.im }
    });
    let eig = SymmetricEigen::new(&x * x.transpose());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let u = RMat::from_fn(k, d, |i, j| eig.eigenvectors[(i, order[j])]);

    let gamma = cb.gamma();
    let mut g1 = RMat::zeros(k - 1, k);
    let mut g2 = RMat::zeros(k - 1, k);
    for r in 0..k - 1 {
        for (col, beam) in [(r, k0 + r), (r + 1, k0 + r + 1)] {
            g1[(r, col)] = (gamma[beam] / 2.0).cos();
            g2[(r, col)] = (gamma[beam] / 2.0).sin();
        }
    }
    let e1 = &g1 * &u;
    let e2 = &g2 * &u;
    let qr = e1.qr();
    let rhs = qr.q().transpose() * e2;
    let psi = qr.r().solve_upper_triangular(&rhs).expect("E1 has full column rank");
    let mut mu: Vec<f64> = psi.complex_eigenvalues().iter().map(|l| 2.0 * l.re.atan()).collect();
    mu.sort_by(f64::total_cmp);
    mu
}

// ---- Slepian-Bangs FIM by finite differences ------------------------------

/// `J_ij = N tr(R^-1 dR_i R^-1 dR_j)` with central-difference derivatives of
/// the model covariance (step `h`).
pub fn finite_difference_fim(scen: &Scenario, h: f64) -> DMatrix<f64> {
    let d = scen.d();
    let r_inv = theoretical_covariance(scen).try_inverse().expect("model covariance is invertible");
    let deriv: Vec<CMat> = (0..d)
        .map(|i| {
            let mut plus = scen.clone();
            let mut minus = scen.clone();
            plus.mu[i] += h;
            minus.mu[i] -= h;
            (theoretical_covariance(&plus) - theoretical_covariance(&minus)).unscale(2.0 * h)
        })
        .collect();
    DMatrix::from_fn(d, d, |i, j| scen.n_snap as f64 * (&r_inv * &deriv[i] * &r_inv * &deriv[j]).trace().re)
}
