//! Lawson–Hanson active-set non-negative least squares.

use crate::error::{DoaError, Result};
use crate::linalg::{thin_svd, RMat, RVec};

/// Outcome of an NNLS solve.
#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: RVec,
    /// `|A x - b|^2`.
    pub residual_sq: f64,
    /// Largest violation of the KKT conditions of `min |A x - b|^2, x >= 0`
    /// measured on the gradient `2 A^T (A x - b)`.
    pub kkt_gap: f64,
    /// Number of variables moved into the passive set.
    pub iterations: usize,
}

/// KKT violation of `x` for `min |A x - b|^2` s.t. `x >= 0`.
pub fn kkt_violation(a: &RMat, b: &RVec, x: &RVec) -> f64 {
    let grad = (a.transpose() * (a * x - b)) * 2.0;
    grad.iter()
        .zip(x.iter())
        .map(|(&g, &xi)| if xi > 0.0 { g.abs() } else { (-g).max(0.0) })
        .fold(0.0, f64::max)
}

fn passive_lstsq(a: &RMat, b: &RVec, passive: &[usize]) -> RVec {
    let sub = RMat::from_fn(a.nrows(), passive.len(), |i, j| a[(i, passive[j])]);
    let svd = thin_svd(&sub);
    let tol = svd.s[0] * 1e-13 * (a.nrows().max(passive.len()) as f64);
    let rhs = RMat::from_column_slice(b.len(), 1, b.as_slice());
    RVec::from_column_slice(svd.solve(&rhs, tol).as_slice())
}

/// Minimizes `|A x - b|^2` over `x >= 0`.
///
/// `max_iter` caps the number of passive-set insertions. Hitting the cap
/// returns [`DoaError::NoConvergence`] carrying the best iterate.
pub fn lawson_hanson(a: &RMat, b: &RVec, max_iter: usize) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(DoaError::InvalidArgument(format!("rhs has {} rows, matrix has {m}", b.len())));
    }
    if n == 0 || a.iter().all(|&v| v == 0.0) {
        return Err(DoaError::InvalidArgument("NNLS design matrix is zero".into()));
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())) * b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-12 * scale.max(1.0) * (m as f64).sqrt();
    let at = a.transpose();

    let mut x = RVec::zeros(n);
    let mut passive = vec![false; n];
    let mut blocked = vec![false; n];
    let mut iterations = 0;

    loop {
        let w = &at * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !blocked[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(t) = candidate else { break };
        if iterations >= max_iter {
            return Err(DoaError::NoConvergence {
                solver: "nnls",
                iterations,
                gap: kkt_violation(a, b, &x),
                best: x.iter().copied().collect(),
            });
        }
        iterations += 1;
        passive[t] = true;

        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let z_p = passive_lstsq(a, b, &idx);
        let pos_t = idx.iter().position(|&j| j == t).unwrap();
        if z_p[pos_t] <= 0.0 {
            // rounding made the entering variable non-positive; skip it until
            // the passive set changes
            passive[t] = false;
            blocked[t] = true;
            continue;
        }
        blocked.iter_mut().for_each(|b| *b = false);

        let mut z_p = z_p;
        let mut idx = idx;
        // inner loop: step back toward feasibility until the passive LS solution is positive
        loop {
            if z_p.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z_p[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            let mut leaving = idx[0];
            for (k, &j) in idx.iter().enumerate() {
                if z_p[k] <= 0.0 {
                    let step = x[j] / (x[j] - z_p[k]);
                    if step < alpha {
                        alpha = step;
                        leaving = j;
                    }
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z_p[k] - x[j]);
            }
            let zero_tol = 1e-14 * x.amax();
            for &j in &idx {
                if j == leaving || x[j] <= zero_tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            idx = (0..n).filter(|&j| passive[j]).collect();
            if idx.is_empty() {
                break;
            }
            z_p = passive_lstsq(a, b, &idx);
        }
    }

    let residual_sq = (a * &x - b).norm_squared();
    Ok(NnlsSolution { kkt_gap: kkt_violation(a, b, &x), x, residual_sq, iterations })
}

/// Ridge-regularized NNLS in the quadratic-program form
/// `min 1/2 x^T (2 C^T C + eps I) x - (2 C^T y)^T x`, `x >= 0`.
///
/// Equivalent to `min |y - C x|^2 + (eps/2) |x|^2`; solved as an augmented
/// NNLS. The reported `kkt_gap` is measured on the ridge-augmented gradient.
pub fn nnls_solve(c: &RMat, y: &RVec, ridge: f64) -> Result<NnlsSolution> {
    let (m, n) = c.shape();
    let max_iter = 10 * n;
    if ridge > 0.0 {
        let w = (ridge / 2.0).sqrt();
        let mut aug = RMat::zeros(m + n, n);
        aug.view_mut((0, 0), (m, n)).copy_from(c);
        for j in 0..n {
            aug[(m + j, j)] = w;
        }
        let mut rhs = RVec::zeros(m + n);
        rhs.rows_mut(0, m).copy_from(y);
        let mut sol = lawson_hanson(&aug, &rhs, max_iter)?;
        sol.residual_sq = (c * &sol.x - y).norm_squared();
        Ok(sol)
    } else {
        lawson_hanson(c, y, max_iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recovers_consistent_solution() {
        let c = RMat::from_row_slice(5, 3, &[1.0, 0.2, 0.0, 0.3, 1.0, 0.1, 0.0, 0.4, 1.0, 0.5, 0.5, 0.5, 0.1, 0.0, 0.7]);
        let x_true = RVec::from_vec(vec![0.95, 0.5, 0.1]);
        let y = &c * &x_true;
        let sol = nnls_solve(&c, &y, 0.0).unwrap();
        assert!((sol.x - x_true).norm() < 1e-8);
        assert!(sol.kkt_gap < 1e-9);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let c = RMat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let sol = nnls_solve(&c, &RVec::zeros(3), 1e-10).unwrap();
        assert!(sol.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn anti_aligned_column_stays_at_bound() {
        let c = RMat::from_column_slice(3, 1, &[1.0, 2.0, -0.5]);
        let y = -c.column(0).into_owned();
        let sol = nnls_solve(&c, &y, 0.0).unwrap();
        assert_eq!(sol.x[0], 0.0);
        assert!(sol.kkt_gap <= 1e-9);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        assert!(nnls_solve(&RMat::zeros(3, 2), &RVec::zeros(3), 0.0).is_err());
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let c = RMat::identity(3, 3);
        let y = RVec::from_vec(vec![1.0, 2.0, 3.0]);
        match lawson_hanson(&c, &y, 1) {
            Err(DoaError::NoConvergence { iterations, best, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best.len(), 3);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn kkt_certificate_holds(vals in prop::collection::vec(-1.0f64..1.0, 40), rhs in prop::collection::vec(-2.0f64..2.0, 10)) {
            let c = RMat::from_row_slice(10, 4, &vals);
            let y = RVec::from_vec(rhs);
            let sol = nnls_solve(&c, &y, 0.0).unwrap();
            prop_assert!(sol.x.iter().all(|&v| v >= 0.0));
            prop_assert!(sol.kkt_gap <= 1e-9, "gap {}", sol.kkt_gap);
        }
    }
}
