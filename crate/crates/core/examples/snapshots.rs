//! Draws array snapshots for a three-source scenario and compares the sample
//! covariance with the model covariance.

use beamspace_doa::array::{generate_snapshots, theoretical_covariance, Scenario};
use beamspace_doa::linalg::fro;
use beamspace_doa::rng::TrialStreams;

fn main() -> beamspace_doa::Result<()> {
    let scen = Scenario::with_asnr(32, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 6.0, 100, 7)?;
    println!("M = {}, d = {}, N0 = {:.4}, ASNR = {:.1} dB", scen.m, scen.d(), scen.n0, scen.asnr_db());

    let model = theoretical_covariance(&scen);
    for n_snap in [100, 1_000, 10_000, 100_000] {
        let s = Scenario { n_snap, ..scen.clone() };
        let real = generate_snapshots(&s, &mut TrialStreams::new(s.seed, 0));
        let r = real.y.sample_covariance();
        println!("N = {n_snap:>7}: |R_hat - R| / |R| = {:.4}", fro(&(&r - &model)) / fro(&model));
    }
    Ok(())
}
