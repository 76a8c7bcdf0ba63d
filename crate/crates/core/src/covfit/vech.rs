//! Hermitian vectorization.
//!
//! Layout for an `n x n` Hermitian matrix, `L = n^2` real entries:
//! first the real parts of the upper triangle including the diagonal
//! (row-major, `j >= i`), then the imaginary parts of the strict upper
//! triangle (row-major, `j > i`). Off-diagonal entries carry a `sqrt(2)`
//! weight, which makes the map an isometry: `|vec_h(R)|_2 = |R|_F`.

use num_complex::Complex64;

use crate::linalg::{CMat, RVec};

/// Real, `sqrt(2)`-weighted coordinates of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianVec {
    n: usize,
    v: RVec,
}

impl HermitianVec {
    pub fn from_vector(n: usize, v: RVec) -> Self {
        assert_eq!(v.len(), n * n, "Hermitian vector of a {n}x{n} matrix needs {} entries", n * n);
        Self { n, v }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_vector(&self) -> &RVec {
        &self.v
    }

    pub fn into_vector(self) -> RVec {
        self.v
    }
}

/// Vectorizes the Hermitian part of `r`.
pub fn vec_h(r: &CMat) -> HermitianVec {
    let n = r.nrows();
    let s2 = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in i..n {
            let z = 0.5 * (r[(i, j)] + r[(j, i)].conj());
            v.push(if i == j { z.re } else { s2 * z.re });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let z = 0.5 * (r[(i, j)] + r[(j, i)].conj());
            v.push(s2 * z.im);
        }
    }
    HermitianVec { n, v: RVec::from_vec(v) }
}

/// Inverse of [`vec_h`].
pub fn mat_h(h: &HermitianVec) -> CMat {
    let n = h.n;
    let s2 = std::f64::consts::SQRT_2;
    let mut r = CMat::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            let x = h.v[idx];
            idx += 1;
            if i == j {
                r[(i, i)] = Complex64::new(x, 0.0);
            } else {
                r[(i, j)].re = x / s2;
                r[(j, i)].re = x / s2;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let y = h.v[idx] / s2;
            idx += 1;
            r[(i, j)].im = y;
            r[(j, i)].im = -y;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro, hermitian_part};
    use proptest::prelude::*;

    fn hermitian_from(vals: &[f64], n: usize) -> CMat {
        let a = CMat::from_fn(n, n, |i, j| Complex64::new(vals[(i * n + j) % vals.len()], vals[(j * n + i + 1) % vals.len()]));
        hermitian_part(&a)
    }

    #[test]
    fn zero_maps_to_zero() {
        let v = vec_h(&CMat::zeros(5, 5));
        assert_eq!(v.as_vector().len(), 25);
        assert!(v.as_vector().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn round_trip_twelve() {
        let vals: Vec<f64> = (0..300).map(|k| ((k * 37 % 101) as f64 - 50.0) / 17.0).collect();
        let r = hermitian_from(&vals, 12);
        let back = mat_h(&vec_h(&r));
        assert!(fro(&(back - &r)) < 1e-14);
    }

    proptest! {
        #[test]
        fn linear_and_isometric(vals in prop::collection::vec(-5.0f64..5.0, 32), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let r1 = hermitian_from(&vals[..16], 4);
            let r2 = hermitian_from(&vals[16..], 4);
            let combo = vec_h(&(r1.scale(a) + r2.scale(b))).into_vector();
            let sep = vec_h(&r1).into_vector() * a + vec_h(&r2).into_vector() * b;
            prop_assert!((combo - sep).norm() < 1e-12);
            prop_assert!((vec_h(&r1).as_vector().norm() - fro(&r1)).abs() < 1e-12);
        }
    }
}
