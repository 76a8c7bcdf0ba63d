//! Small dense helpers shared by the estimators.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

/// Reduces an angle to the half-open interval (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let tau = 2.0 * PI;
    let mut y = x.rem_euclid(tau);
    if y > PI {
        y -= tau;
    }
    if y <= -PI {
        y += tau;
    }
    y
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// non-increasing order; eigenvector columns follow the same order.
pub fn hermitian_eig_desc(r: &CMat) -> (Vec<f64>, CMat) {
    record_decomposition(r.nrows());
    let sym = hermitian_part(r);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let n = r.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// (R + R^H) / 2.
pub fn hermitian_part(r: &CMat) -> CMat {
    (r + r.adjoint()).scale(0.5)
}

/// Eigenvalues of a small square complex matrix.
pub fn complex_eigenvalues(a: &CMat) -> Vec<Complex64> {
    record_decomposition(a.nrows());
    let n = a.nrows();
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let fa = to_faer(a);
    fa.eigenvalues().expect("eigenvalue iteration failed on a finite matrix")
}

/// Scalars accepted by [`thin_svd`].
pub trait SvdScalar: ComplexField<RealField = f64> + faer::traits::ComplexField + Copy {}

impl SvdScalar for f64 {}
impl SvdScalar for Complex64 {}

/// Thin singular value decomposition `A = U diag(s) V^H`, `s` non-increasing.
#[derive(Debug, Clone)]
pub struct Svd<T: SvdScalar> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

fn to_faer<T: SvdScalar>(a: &DMatrix<T>) -> faer::Mat<T> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer<T: SvdScalar>(a: faer::MatRef<'_, T>) -> DMatrix<T> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| *a.get(i, j))
}

/// Thin SVD computed with `faer`. The bidiagonal QR iteration in `nalgebra`
/// stops early on clustered singular values and loses several digits.
pub fn thin_svd<T: SvdScalar>(a: &DMatrix<T>) -> Svd<T> {
    record_decomposition(a.nrows().min(a.ncols()));
    let svd = to_faer(a).thin_svd().expect("SVD failed on a finite matrix");
    let s = svd.S().column_vector();
    Svd {
        u: from_faer(svd.U()),
        s: (0..s.nrows()).map(|k| ComplexField::real(*s.get(k))).collect(),
        v: from_faer(svd.V()),
    }
}

impl<T: SvdScalar> Svd<T> {
    /// Minimum-norm least-squares solution of `A X = B`, discarding singular
    /// values at or below `tol`.
    pub fn solve(&self, b: &DMatrix<T>, tol: f64) -> DMatrix<T> {
        let mut c = self.u.adjoint() * b;
        for (k, &s) in self.s.iter().enumerate() {
            let inv = if s > tol { 1.0 / s } else { 0.0 };
            c.row_mut(k).scale_mut(inv);
        }
        &self.v * c
    }
}

/// Ratio of smallest to largest singular value (0 for a zero matrix).
pub fn inverse_condition<T: SvdScalar>(a: &DMatrix<T>) -> f64 {
    let sv = thin_svd(a).s;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Frobenius norm of a complex matrix.
pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Copies a real matrix into a complex one.
pub fn to_complex(a: &RMat) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}

#[cfg(debug_assertions)]
thread_local! {
    static MAX_DECOMP_DIM: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

/// Debug-build instrumentation: remembers the largest row dimension handed
/// to a matrix decomposition on this thread.
#[inline]
pub fn record_decomposition(_rows: usize) {
    #[cfg(debug_assertions)]
    MAX_DECOMP_DIM.with(|c| c.set(c.get().max(_rows)));
}

/// Returns and resets the largest decomposition row dimension seen on this
/// thread. Always `None` in release builds.
pub fn take_max_decomposition_dim() -> Option<usize> {
    #[cfg(debug_assertions)]
    {
        Some(MAX_DECOMP_DIM.with(|c| c.replace(0)))
    }
    #[cfg(not(debug_assertions))]
    {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eig_sorted_descending() {
        let r = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]));
        let (vals, vecs) = hermitian_eig_desc(&r);
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }
}
