//! Cross-checks of the library solvers against slow reference solvers.

mod common;

use beamspace_doa::array::Scenario;
use beamspace_doa::covfit::{spectral_grid, toeplitz_psd_project, ToeplitzParams};
use beamspace_doa::linalg::{CMat, RVec};
use beamspace_doa::metrics::stochastic_crb;

use common::*;

#[test]
fn toeplitz_projection_matches_dual_gradient() {
    let m = 6;
    let grid = spectral_grid(4 * m);
    // t0 = 0, t1 = 1 is indefinite
    let mut z = RVec::zeros(2 * m - 1);
    z[1] = 1.0;
    let indefinite = ToeplitzParams::from_vector(m, z).to_matrix();
    let mut rng = rng(31);
    let inputs = [indefinite, random_hermitian(m, &mut rng), random_hermitian(m, &mut rng)];
    for r in &inputs {
        let lib = toeplitz_psd_project(r, grid.len(), 0.0).unwrap();
        let (obj, mat, min_spec) = toeplitz_projection_oracle(r, &grid, 20000);
        assert!(min_spec > -1e-6, "oracle infeasible: {min_spec}");
        assert!((lib.objective - obj).abs() <= 1e-4 * obj.max(1.0), "{} vs {obj}", lib.objective);
        assert!((&lib.matrix - &mat).norm() < 1e-2, "{}", (&lib.matrix - &mat).norm());
    }
}

#[test]
fn projection_is_non_expansive() {
    let m = 8;
    let mut rng = rng(32);
    for _ in 0..20 {
        let a = random_hermitian(m, &mut rng);
        let b = random_hermitian(m, &mut rng);
        let pa = toeplitz_psd_project(&a, 4 * m, 0.0).unwrap().matrix;
        let pb = toeplitz_psd_project(&b, 4 * m, 0.0).unwrap().matrix;
        assert!((&pa - &pb).norm() <= (&a - &b).norm() + 1e-9);
    }
}

#[test]
fn crb_single_source_closed_form() {
    // one source: CRB = 6 / (N M (M^2 - 1)) (1/s + 1/(M s^2)), s = p / N0
    for (m, p, n0, n) in [(8usize, 1.0, 0.5, 50usize), (32, 0.3, 1.0, 100), (16, 2.0, 0.1, 10)] {
        let scen = Scenario::new(m, vec![0.4], vec![p], n0, n, 0).unwrap();
        let s = p / n0;
        let mf = m as f64;
        let want = 6.0 / (n as f64 * mf * (mf * mf - 1.0)) * (1.0 / s + 1.0 / (mf * s * s));
        let got = stochastic_crb(&scen).unwrap().crb;
        assert!((got - want).abs() / want < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn fisher_matrix_is_symmetric_positive() {
    let scen = Scenario::with_asnr(32, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 0.0, 100, 0).unwrap();
    let fim = stochastic_crb(&scen).unwrap().fim;
    assert!((&fim - fim.transpose()).norm() < 1e-9 * fim.norm());
    let eig = nalgebra::SymmetricEigen::new(fim).eigenvalues;
    assert!(eig.min() > 0.0);
    let _ = CMat::zeros(1, 1);
}
