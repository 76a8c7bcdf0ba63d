//! Element-space ESPRIT on the centred 12-element subarray.

use beamspace_doa::array::{generate_snapshots, Scenario};
use beamspace_doa::coarse::{coarse_estimate, InvarianceSolver};
use beamspace_doa::combiner::centro_symmetric_mask;
use beamspace_doa::metrics::matched_errors;
use beamspace_doa::rng::TrialStreams;

fn main() -> beamspace_doa::Result<()> {
    let mu = vec![-2.1, 0.5, 2.5];
    let mask = centro_symmetric_mask(32, 12)?;
    for asnr in [0.0, 6.0, 15.0] {
        let scen = Scenario::with_asnr(32, mu.clone(), vec![0.95, 0.5, 0.1], asnr, 100, 3)?;
        let y = generate_snapshots(&scen, &mut TrialStreams::new(3, 0)).y;
        for solver in [InvarianceSolver::Ls, InvarianceSolver::Tls] {
            let est = coarse_estimate(&mask.apply(&y), 3, solver)?;
            let err = matched_errors(&est.mu, &mu)?;
            println!("ASNR {asnr:>4} dB {solver:>3}: mu = {:.4?}  errors = [{}]", est.mu, sci(&err));
        }
    }
    Ok(())
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}
