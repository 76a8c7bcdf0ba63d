//! Coarse element-space ESPRIT on the virtual subarray.

use nalgebra::DMatrix;

use crate::array::SnapshotMatrix;
use crate::error::{DoaError, Result};
use crate::linalg::{complex_eigenvalues, hermitian_eig_desc, hermitian_part, record_decomposition, thin_svd, CMat, SvdScalar};

/// `J1 U` with `sigma_min / sigma_max` below this is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// How the overdetermined invariance equation `E1 X = E2` is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvarianceSolver {
    /// Least squares, `X = pinv(E1) E2`.
    Ls,
    /// Total least squares over the stacked `[E1 E2]`.
    Tls,
}

impl std::str::FromStr for InvarianceSolver {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ls" => Ok(Self::Ls),
            "tls" => Ok(Self::Tls),
            other => Err(DoaError::InvalidArgument(format!("unknown invariance solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for InvarianceSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Self::Ls => "ls",
            Self::Tls => "tls",
        })
    }
}

/// Result of the coarse stage.
#[derive(Debug, Clone)]
pub struct CoarseEstimate {
    /// Spatial frequencies, ascending.
    pub mu: Vec<f64>,
    /// `d` principal eigenvectors of the averaged covariance.
    pub signal_subspace: CMat,
    /// All covariance eigenvalues, non-increasing.
    pub eigvals: Vec<f64>,
    /// Forward-backward averaged sample covariance of the subarray.
    pub r_fba: CMat,
}

/// `(R + Pi conj(R) Pi) / 2`.
pub fn forward_backward_average(r: &CMat) -> Result<CMat> {
    let n = r.nrows();
    if r.ncols() != n {
        return Err(DoaError::NotSquare { rows: n, cols: r.ncols() });
    }
    let flipped = CMat::from_fn(n, n, |i, j| r[(n - 1 - i, n - 1 - j)].conj());
    Ok((r + flipped).scale(0.5))
}

/// Solves `E1 X ~= E2` for the `d x d` invariance operator.
pub fn solve_invariance<T: SvdScalar>(e1: &DMatrix<T>, e2: &DMatrix<T>, solver: InvarianceSolver) -> Result<DMatrix<T>> {
    let (rows, d) = e1.shape();
    if e2.shape() != (rows, d) {
        return Err(DoaError::InvalidArgument("invariance blocks differ in shape".into()));
    }
    if rows < d {
        return Err(DoaError::InsufficientPairs { pairs: rows, d });
    }
    record_decomposition(rows);
    let svd = thin_svd(e1);
    let smax = svd.s[0];
    let smin = svd.s[d - 1];
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if ratio < RANK_TOL {
        return Err(DoaError::RankDeficient { ratio });
    }
    match solver {
        InvarianceSolver::Ls => Ok(svd.solve(e2, 0.0)),
        InvarianceSolver::Tls => {
            // pad with zero rows so the SVD yields all 2d right singular vectors
            let n_rows = rows.max(2 * d);
            let mut stacked = DMatrix::<T>::zeros(n_rows, 2 * d);
            stacked.view_mut((0, 0), (rows, d)).copy_from(e1);
            stacked.view_mut((0, d), (rows, d)).copy_from(e2);
            let v = thin_svd(&stacked).v;
            let v12 = v.view((0, d), (d, d)).into_owned();
            let v22 = v.view((d, d), (d, d)).into_owned();
            let inv = v22.try_inverse().ok_or(DoaError::RankDeficient { ratio: 0.0 })?;
            Ok(-(v12 * inv))
        }
    }
}

/// Invariance operator between the two maximally overlapping subarrays
/// (rows `0..n-1` and `1..n`) of an orthonormal signal basis.
pub fn esprit_shift_invariance(u_s: &CMat, solver: InvarianceSolver) -> Result<CMat> {
    let (n, d) = u_s.shape();
    if n < d + 1 {
        return Err(DoaError::TooManySources { d, rows: n });
    }
    let e1 = u_s.rows(0, n - 1).into_owned();
    let e2 = u_s.rows(1, n - 1).into_owned();
    solve_invariance(&e1, &e2, solver)
}

/// Sample covariance, forward-backward averaging, principal subspace and
/// shift invariance; returns `angle(eig(Psi))` sorted ascending.
pub fn coarse_estimate(y_sub: &SnapshotMatrix, d: usize, solver: InvarianceSolver) -> Result<CoarseEstimate> {
    let n = y_sub.channels();
    if d == 0 || d >= n {
        return Err(DoaError::TooManySources { d, rows: n });
    }
    if y_sub.snapshots() < d {
        return Err(DoaError::InvalidArgument(format!(
            "{} snapshots cannot support {d} sources",
            y_sub.snapshots()
        )));
    }
    let r = hermitian_part(&y_sub.sample_covariance());
    let r_fba = forward_backward_average(&r)?;
    let (eigvals, vecs) = hermitian_eig_desc(&r_fba);
    let signal_subspace = vecs.columns(0, d).into_owned();
    let psi = esprit_shift_invariance(&signal_subspace, solver)?;
    let mut mu: Vec<f64> = complex_eigenvalues(&psi).iter().map(|z| z.arg()).collect();
    mu.sort_by(f64::total_cmp);
    Ok(CoarseEstimate { mu, signal_subspace, eigvals, r_fba })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use crate::array::{manifold_at, ChannelKind, Scenario};
    use crate::combiner::centro_symmetric_mask;
    use crate::linalg::fro;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMat::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        hermitian_part(&a)
    }

    fn exchange(n: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| if i + j + 1 == n { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    #[test]
    fn fba_examples() {
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_vec(
            [1.0, 2.0, 3.0, 2.0, 1.0].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        ));
        assert!(fro(&(forward_backward_average(&diag).unwrap() - &diag)) < 1e-15);
        let eye = CMat::identity(4, 4);
        assert!(fro(&(forward_backward_average(&eye).unwrap() - &eye)) < 1e-15);
        let r = random_hermitian(7, 3);
        let out = forward_backward_average(&r).unwrap();
        let pi = exchange(7);
        assert!(fro(&(&pi * out.conjugate() * &pi - &out)) < 1e-12);
        assert!(fro(&(out.adjoint() - &out)) < 1e-12);
        assert!(forward_backward_average(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn single_source_zero_frequency() {
        let u = CMat::from_element(4, 1, Complex64::new(0.5, 0.0));
        for solver in [InvarianceSolver::Ls, InvarianceSolver::Tls] {
            let psi = esprit_shift_invariance(&u, solver).unwrap();
            assert!((psi[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn exact_subspace_recovers_frequencies() {
        let mu = [-2.1, 0.5, 2.5];
        let positions: Vec<usize> = (10..22).collect();
        let a = manifold_at(&mu, &positions);
        let q = a.qr().q();
        let ls = esprit_shift_invariance(&q, InvarianceSolver::Ls).unwrap();
        let tls = esprit_shift_invariance(&q, InvarianceSolver::Tls).unwrap();
        assert!(fro(&(&ls - &tls)) < 1e-8);
        for psi in [ls, tls] {
            let mut est: Vec<f64> = complex_eigenvalues(&psi).iter().map(|z| z.arg()).collect();
            est.sort_by(f64::total_cmp);
            for (e, t) in est.iter().zip(mu) {
                assert!((e - t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let mut u = CMat::zeros(4, 2);
        u[(3, 0)] = Complex64::new(1.0, 0.0);
        u[(3, 1)] = Complex64::new(0.0, 1.0);
        assert!(matches!(
            esprit_shift_invariance(&u, InvarianceSolver::Ls),
            Err(DoaError::RankDeficient { .. })
        ));
        assert!(matches!(
            esprit_shift_invariance(&CMat::zeros(2, 2), InvarianceSolver::Ls),
            Err(DoaError::TooManySources { .. })
        ));
    }

    #[test]
    fn noiseless_coarse_estimates() {
        let mask = centro_symmetric_mask(32, 12).unwrap();
        let scen = Scenario::new(32, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 0.0, 100, 4).unwrap();
        let real = crate::array::generate_snapshots(&scen, &mut crate::rng::TrialStreams::new(4, 0));
        let est = coarse_estimate(&mask.apply(&real.y), 3, InvarianceSolver::Tls).unwrap();
        for (e, t) in est.mu.iter().zip(&scen.mu) {
            assert!((e - t).abs() < 1e-6);
        }
        assert!(est.eigvals.windows(2).all(|w| w[0] >= w[1]));
        let gram = est.signal_subspace.adjoint() * &est.signal_subspace;
        assert!(fro(&(gram - CMat::identity(3, 3))) < 1e-10);

        let one = Scenario::new(32, vec![0.0], vec![1.0], 0.0, 10, 4).unwrap();
        let real = crate::array::generate_snapshots(&one, &mut crate::rng::TrialStreams::new(4, 1));
        let est = coarse_estimate(&mask.apply(&real.y), 1, InvarianceSolver::Ls).unwrap();
        assert!(est.mu[0].abs() < 1e-10);
    }

    #[test]
    fn coarse_rejects_too_many_sources() {
        let y = SnapshotMatrix::new(CMat::zeros(3, 10), ChannelKind::Element);
        assert!(coarse_estimate(&y, 3, InvarianceSolver::Ls).is_err());
    }
}
