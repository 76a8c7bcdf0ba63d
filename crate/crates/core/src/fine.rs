//! Sparse beamspace Unitary ESPRIT over a union of contiguous DFT beam
//! windows.
//!
//! With phase-centred beams, `b_k^H a(mu) = exp(j c mu) D(mu - gamma_k)`
//! with a real Dirichlet kernel `D`, so the beamspace manifold is real up to
//! a per-source phase and the signal subspace can be taken from the real
//! matrix `sqrt(2) [Re Y_b, Im Y_b]`. Two adjacent beams satisfy
//!
//! ```text
//! tan(mu/2) [cos(gamma_k/2) D_k + cos(gamma_{k+1}/2) D_{k+1}]
//!     = sin(gamma_k/2) D_k + sin(gamma_{k+1}/2) D_{k+1}
//! ```
//!
//! which gives one real invariance equation per adjacent pair present in the
//! selection.

use std::fmt;

use num_complex::Complex64;

use crate::array::{ChannelKind, SnapshotMatrix};
use crate::coarse::{solve_invariance, InvarianceSolver};
use crate::combiner::DftCodebook;
use crate::error::{DoaError, Result};
use crate::linalg::{complex_eigenvalues, thin_svd, to_complex, RMat};

/// `sqrt(2) [Re(Y_b), Im(Y_b)]`, an `n x 2N` real matrix.
pub fn unitary_real_transform(y_b: &SnapshotMatrix) -> RMat {
    let (n, snaps) = y_b.data.shape();
    let s2 = std::f64::consts::SQRT_2;
    RMat::from_fn(n, 2 * snaps, |i, j| {
        if j < snaps {
            s2 * y_b.data[(i, j)].re
        } else {
            s2 * y_b.data[(i, j - snaps)].im
        }
    })
}

/// Adjacent beam pairs inside a sorted beam set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    /// Sorted beam indices the row positions refer to.
    pub beams: Vec<usize>,
    /// Row positions `(r, r + 1)` with `beams[r + 1] == beams[r] + 1`.
    pub pairs: Vec<(usize, usize)>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs as beam indices rather than row positions.
    pub fn beam_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|&(i, j)| (self.beams[i], self.beams[j])).collect()
    }
}

/// Collects the consecutive-index adjacencies of a sorted, distinct beam set.
pub fn forward_pairs(k_fine: &[usize]) -> Result<PairSet> {
    if k_fine.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DoaError::InvalidBeamSet(format!("beam set {k_fine:?} is not sorted and distinct")));
    }
    let pairs = (0..k_fine.len().saturating_sub(1)).filter(|&r| k_fine[r + 1] == k_fine[r] + 1).map(|r| (r, r + 1)).collect();
    Ok(PairSet { beams: k_fine.to_vec(), pairs })
}

/// How eigenvalues of the invariance operator are turned into frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMap {
    /// Plain row selectors and `mu = arg(lambda)`.
    PhaseAngle,
    /// Half-angle beam weights and `mu = 2 atan(Re lambda)`.
    Arctangent,
}

impl fmt::Display for EigenMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::PhaseAngle => "phase-angle",
            Self::Arctangent => "arctangent",
        })
    }
}

impl std::str::FromStr for EigenMap {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "phase-angle" => Ok(Self::PhaseAngle),
            "arctangent" => Ok(Self::Arctangent),
            other => Err(DoaError::InvalidArgument(format!("unknown eigen map '{other}'"))),
        }
    }
}

/// Result of the fine stage.
#[derive(Debug, Clone)]
pub struct FineEstimate {
    /// Spatial frequencies in `(-pi, pi]`, ascending.
    pub mu: Vec<f64>,
    pub phi_eigvals: Vec<Complex64>,
    pub pair_count: usize,
}

/// Selection weights `(Gamma_1, Gamma_2)`, one row per pair.
pub fn pair_weights(pairs: &PairSet, codebook: &DftCodebook, map: EigenMap) -> (RMat, RMat) {
    let n = pairs.beams.len();
    let p = pairs.len();
    let mut g1 = RMat::zeros(p, n);
    let mut g2 = RMat::zeros(p, n);
    let gamma = codebook.gamma();
    for (row, &(i, j)) in pairs.pairs.iter().enumerate() {
        match map {
            EigenMap::PhaseAngle => {
                g1[(row, i)] = 1.0;
                g2[(row, j)] = 1.0;
            }
            EigenMap::Arctangent => {
                let (gi, gj) = (gamma[pairs.beams[i]] / 2.0, gamma[pairs.beams[j]] / 2.0);
                g1[(row, i)] = gi.cos();
                g1[(row, j)] = gj.cos();
                g2[(row, i)] = gi.sin();
                g2[(row, j)] = gj.sin();
            }
        }
    }
    (g1, g2)
}

/// Frequencies from the real signal subspace `u_s` (rows ordered as
/// `pairs.beams`).
pub fn estimate_from_subspace(
    u_s: &RMat,
    pairs: &PairSet,
    codebook: &DftCodebook,
    solver: InvarianceSolver,
    map: EigenMap,
) -> Result<FineEstimate> {
    let d = u_s.ncols();
    if pairs.len() < d {
        return Err(DoaError::InsufficientPairs { pairs: pairs.len(), d });
    }
    let (g1, g2) = pair_weights(pairs, codebook, map);
    let phi = solve_invariance(&(&g1 * u_s), &(&g2 * u_s), solver)?;
    let phi_eigvals = complex_eigenvalues(&to_complex(&phi));
    let mut mu: Vec<f64> = phi_eigvals
        .iter()
        .map(|z| match map {
            EigenMap::PhaseAngle => z.arg(),
            EigenMap::Arctangent => 2.0 * z.re.atan(),
        })
        .collect();
    mu.sort_by(f64::total_cmp);
    Ok(FineEstimate { mu, phi_eigvals, pair_count: pairs.len() })
}

/// Fine estimate from beamspace data whose rows follow the sorted `k_fine`.
pub fn sparse_beamspace_esprit(
    y_b: &SnapshotMatrix,
    k_fine: &[usize],
    d: usize,
    codebook: &DftCodebook,
    solver: InvarianceSolver,
    map: EigenMap,
) -> Result<FineEstimate> {
    if y_b.kind != ChannelKind::Beam || y_b.channels() != k_fine.len() {
        return Err(DoaError::InvalidBeamSet(format!(
            "expected {} beamspace rows, got {} {:?} rows",
            k_fine.len(),
            y_b.channels(),
            y_b.kind
        )));
    }
    if let Some(&k) = k_fine.iter().find(|&&k| k >= codebook.m()) {
        return Err(DoaError::InvalidBeamSet(format!("beam {k} outside codebook of {}", codebook.m())));
    }
    let pairs = forward_pairs(k_fine)?;
    if pairs.len() < d {
        return Err(DoaError::InsufficientPairs { pairs: pairs.len(), d });
    }
    if d == 0 || d > k_fine.len() {
        return Err(DoaError::TooManySources { d, rows: k_fine.len() });
    }
    let y_ue = unitary_real_transform(y_b);
    let svd = thin_svd(&y_ue);
    let u_s = svd.u.columns(0, d).into_owned();
    estimate_from_subspace(&u_s, &pairs, codebook, solver, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{generate_snapshots, Scenario};
    use crate::combiner::project_to_beams;
    use crate::linalg::{take_max_decomposition_dim, CMat};
    use crate::rng::TrialStreams;
    use crate::selection::oracle_select;

    fn scenario(n0: f64, seed: u64) -> Scenario {
        Scenario::new(32, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], n0, 100, seed).unwrap()
    }

    #[test]
    fn real_transform_shape_and_norm() {
        let data = CMat::from_fn(3, 4, |i, j| Complex64::new(i as f64 - j as f64, 0.5 * (i * j) as f64));
        let y = SnapshotMatrix::new(data.clone(), ChannelKind::Beam);
        let out = unitary_real_transform(&y);
        assert_eq!(out.shape(), (3, 8));
        assert!((out.norm() / crate::linalg::fro(&data) - std::f64::consts::SQRT_2).abs() < 1e-14);
        let real = SnapshotMatrix::new(data.map(|z| Complex64::new(z.re, 0.0)), ChannelKind::Beam);
        let out = unitary_real_transform(&real);
        assert!(out.columns(4, 4).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pair_examples() {
        let p = forward_pairs(&[3, 4, 5, 9, 10]).unwrap();
        assert_eq!(p.beam_pairs(), vec![(3, 4), (4, 5), (9, 10)]);
        assert_eq!(forward_pairs(&(1..=6).collect::<Vec<_>>()).unwrap().len(), 5);
        assert!(forward_pairs(&[2, 4, 6]).unwrap().is_empty());
        assert!(forward_pairs(&[4, 2]).is_err());
    }

    fn noiseless_run(map: EigenMap) -> Vec<f64> {
        let scen = scenario(0.0, 11);
        let cb = DftCodebook::new(32).unwrap();
        let real = generate_snapshots(&scen, &mut TrialStreams::new(11, 0));
        let sel = oracle_select(&scen.mu, &cb, 2).unwrap();
        let y_b = project_to_beams(&real.y, &sel.union, &cb).unwrap();
        sparse_beamspace_esprit(&y_b, &sel.union, 3, &cb, InvarianceSolver::Ls, map).unwrap().mu
    }

    #[test]
    fn noiseless_oracle_pins_the_eigen_map() {
        let mu = noiseless_run(EigenMap::Arctangent);
        for (e, t) in mu.iter().zip([-2.1, 0.5, 2.5]) {
            assert!((e - t).abs() < 1e-6, "{mu:?}");
        }
        let literal = noiseless_run(EigenMap::PhaseAngle);
        let worst = literal.iter().zip([-2.1, 0.5, 2.5]).map(|(e, t)| (e - t).abs()).fold(0.0, f64::max);
        assert!(worst > 1e-2, "the literal phase map unexpectedly works: {literal:?}");
    }

    /// Dense beamspace ESPRIT written directly over all `M - 1` adjacent pairs.
    fn dense_estimate(y_b: &SnapshotMatrix, d: usize, cb: &DftCodebook) -> Vec<f64> {
        let m = cb.m();
        let y_ue = unitary_real_transform(y_b);
        let u = thin_svd(&y_ue).u.columns(0, d).into_owned();
        let mut g1 = RMat::zeros(m - 1, m);
        let mut g2 = RMat::zeros(m - 1, m);
        for k in 0..m - 1 {
            let (a, b) = (cb.gamma()[k] / 2.0, cb.gamma()[k + 1] / 2.0);
            g1[(k, k)] = a.cos();
            g1[(k, k + 1)] = b.cos();
            g2[(k, k)] = a.sin();
            g2[(k, k + 1)] = b.sin();
        }
        let e1 = &g1 * &u;
        let e2 = &g2 * &u;
        let phi = (e1.transpose() * &e1).try_inverse().unwrap() * e1.transpose() * e2;
        let mut mu: Vec<f64> = complex_eigenvalues(&to_complex(&phi)).iter().map(|z| 2.0 * z.re.atan()).collect();
        mu.sort_by(f64::total_cmp);
        mu
    }

    #[test]
    fn contiguous_selection_matches_dense_construction() {
        let cb = DftCodebook::new(32).unwrap();
        let all: Vec<usize> = (0..32).collect();
        for seed in 0..5 {
            let scen = Scenario::with_asnr(32, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 10.0, 100, seed).unwrap();
            let real = generate_snapshots(&scen, &mut TrialStreams::new(seed, 0));
            let y_b = project_to_beams(&real.y, &all, &cb).unwrap();
            let sparse = sparse_beamspace_esprit(&y_b, &all, 3, &cb, InvarianceSolver::Ls, EigenMap::Arctangent).unwrap();
            for (a, b) in sparse.mu.iter().zip(dense_estimate(&y_b, 3, &cb)) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn too_few_pairs() {
        let cb = DftCodebook::new(8).unwrap();
        let y = SnapshotMatrix::new(CMat::zeros(3, 10), ChannelKind::Beam);
        assert!(matches!(
            sparse_beamspace_esprit(&y, &[2, 4, 6], 1, &cb, InvarianceSolver::Ls, EigenMap::Arctangent),
            Err(DoaError::InsufficientPairs { pairs: 0, d: 1 })
        ));
    }

    #[test]
    fn global_phase_does_not_move_estimates() {
        let scen = scenario(0.2, 5);
        let cb = DftCodebook::new(32).unwrap();
        let real = generate_snapshots(&scen, &mut TrialStreams::new(5, 0));
        let sel = oracle_select(&scen.mu, &cb, 2).unwrap();
        let y_b = project_to_beams(&real.y, &sel.union, &cb).unwrap();
        let base = sparse_beamspace_esprit(&y_b, &sel.union, 3, &cb, InvarianceSolver::Ls, EigenMap::Arctangent).unwrap();
        let rotated = SnapshotMatrix::new(y_b.data.scale(1.0) * Complex64::from_polar(1.0, 0.83), ChannelKind::Beam);
        let rot = sparse_beamspace_esprit(&rotated, &sel.union, 3, &cb, InvarianceSolver::Ls, EigenMap::Arctangent).unwrap();
        for (a, b) in base.mu.iter().zip(&rot.mu) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn decompositions_stay_within_fine_dimension() {
        let scen = scenario(0.1, 9);
        let cb = DftCodebook::new(32).unwrap();
        let real = generate_snapshots(&scen, &mut TrialStreams::new(9, 0));
        let sel = oracle_select(&scen.mu, &cb, 2).unwrap();
        let y_b = project_to_beams(&real.y, &sel.union, &cb).unwrap();
        take_max_decomposition_dim();
        for solver in [InvarianceSolver::Ls, InvarianceSolver::Tls] {
            sparse_beamspace_esprit(&y_b, &sel.union, 3, &cb, solver, EigenMap::Arctangent).unwrap();
        }
        if let Some(dim) = take_max_decomposition_dim() {
            assert!(dim <= sel.union.len(), "decomposition of size {dim}");
        }
    }
}
