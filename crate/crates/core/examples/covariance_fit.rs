//! Fits source powers on the coarse subarray, rebuilds the full-aperture
//! signal covariance and projects it onto the Toeplitz PSD set.

use beamspace_doa::array::{generate_snapshots, Scenario};
use beamspace_doa::coarse::{coarse_estimate, InvarianceSolver};
use beamspace_doa::combiner::centro_symmetric_mask;
use beamspace_doa::covfit::{fit_powers, reconstruct_signal_covariance, toeplitz_psd_project, DEFAULT_RIDGE};
use beamspace_doa::rng::TrialStreams;

fn main() -> beamspace_doa::Result<()> {
    let m = 32;
    let scen = Scenario::with_asnr(m, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 6.0, 100, 11)?;
    let mask = centro_symmetric_mask(m, 12)?;
    let y = generate_snapshots(&scen, &mut TrialStreams::new(11, 0)).y;
    let coarse = coarse_estimate(&mask.apply(&y), scen.d(), InvarianceSolver::Tls)?;

    let fit = fit_powers(&coarse.r_fba, &coarse.mu, &mask, DEFAULT_RIDGE)?;
    println!("true powers  {:?}, N0 = {:.4}", scen.powers, scen.n0);
    println!("fitted       {:.4?}, N0 = {:.4} (kkt gap {:.1e})", fit.p_hat, fit.n0_hat, fit.kkt_gap);

    let r_s = reconstruct_signal_covariance(&coarse.mu, &fit.p_hat, m)?;
    let proj = toeplitz_psd_project(&r_s, 4 * m, DEFAULT_RIDGE)?;
    println!(
        "projection: objective {:.3e}, min grid spectrum {:.2e}, min eigenvalue {:.2e}, {} active constraints",
        proj.objective,
        proj.min_grid_spectrum,
        proj.min_eigenvalue(),
        proj.active_constraints
    );
    Ok(())
}
