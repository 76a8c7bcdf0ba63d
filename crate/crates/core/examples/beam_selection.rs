//! Compares the covariance-guided beam windows with the fixed sectorization
//! rule and the oracle choice for one realization.

use beamspace_doa::array::{generate_snapshots, Scenario};
use beamspace_doa::coarse::{coarse_estimate, InvarianceSolver};
use beamspace_doa::combiner::{centro_symmetric_mask, noncentro_mask, DftCodebook};
use beamspace_doa::covfit::{fit_powers, reconstruct_signal_covariance, toeplitz_psd_project, DEFAULT_RIDGE};
use beamspace_doa::rng::TrialStreams;
use beamspace_doa::selection::{
    baseline_sectorization_select, default_sector_width, oracle_select, sectorize, select_beams, SelectionParams,
};

fn main() -> beamspace_doa::Result<()> {
    let m = 32;
    let k_f = 2;
    let cb = DftCodebook::new(m)?;
    let scen = Scenario::with_asnr(m, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 3.0, 100, 5)?;
    let y = generate_snapshots(&scen, &mut TrialStreams::new(5, 0)).y;

    let centro = centro_symmetric_mask(m, 12)?;
    let coarse = coarse_estimate(&centro.apply(&y), 3, InvarianceSolver::Tls)?;
    let fit = fit_powers(&coarse.r_fba, &coarse.mu, &centro, DEFAULT_RIDGE)?;
    let r_s = reconstruct_signal_covariance(&coarse.mu, &fit.p_hat, m)?;
    let r_tilde = toeplitz_psd_project(&r_s, 4 * m, DEFAULT_RIDGE)?.matrix;

    let pools = sectorize(&coarse.mu, &cb, default_sector_width(m), k_f)?;
    for s in &pools.sectors {
        println!("sector beams {}..={} centre {:+.3} members {:?} budget {}", s.lo, s.hi, s.center, s.members, s.budget);
    }
    let cov = select_beams(&pools, &r_tilde, &cb, &SelectionParams::default())?;
    for (w, sc) in cov.per_sector.iter().zip(&cov.scores) {
        let sc = sc.expect("covariance-guided windows are scored");
        println!("  window {w:?}: score {:.4} capture {:.4} cond^2 {:.2}", sc.score, sc.cap, sc.cond2);
    }

    let lead = coarse_estimate(&noncentro_mask(m, 12)?.apply(&y), 3, InvarianceSolver::Tls)?;
    println!("covariance-guided {:?}", cov.union);
    println!("sectorization     {:?}", baseline_sectorization_select(&lead.mu, &cb, k_f)?.union);
    println!("oracle            {:?}", oracle_select(&scen.mu, &cb, k_f)?.union);
    let nearest: Vec<usize> = scen.mu.iter().map(|&mu| cb.nearest_beam(mu)).collect();
    println!("nearest beams to the truth {nearest:?}");
    Ok(())
}
