//! DFT codebook, virtual subarray masks and the digital combiner that makes
//! the hybrid front end reproduce a subarray.

use beamspace_doa::array::{generate_snapshots, Scenario};
use beamspace_doa::combiner::{centro_symmetric_mask, noncentro_mask, project_to_beams, solve_baseband_combiner, DftCodebook};
use beamspace_doa::linalg::{fro, CMat};
use beamspace_doa::rng::TrialStreams;

fn main() -> beamspace_doa::Result<()> {
    let m = 32;
    let cb = DftCodebook::new(m)?;
    println!("beam grid spacing {:.4} rad, first beams {:?}", cb.cell(), &cb.gamma()[..3]);

    let centro = centro_symmetric_mask(m, 12)?;
    let lead = noncentro_mask(m, 12)?;
    println!("centred mask {:?}", centro.indices());
    println!("leading mask {:?}", lead.indices());

    // any 12 beams whose restriction to the mask is invertible will do
    let beams: Vec<usize> = (10..22).collect();
    let w_rf = cb.analog_weights(&beams);
    let w_bb = solve_baseband_combiner(&w_rf, &centro)?;
    let resid = centro.select_rows(&(&w_rf * &w_bb)) - CMat::identity(12, 12);
    println!("|J W_RF W_BB - I| = {:.2e}", fro(&resid));

    // with only the masked antennas connected, the combined output is the subarray data
    let scen = Scenario::with_asnr(m, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 10.0, 50, 1)?;
    let y = generate_snapshots(&scen, &mut TrialStreams::new(1, 0)).y;
    let direct = centro.apply(&y).data;
    let hybrid = (centro.select_rows(&w_rf) * &w_bb).adjoint() * &direct;
    println!("hybrid vs masked rows: relative error {:.2e}", fro(&(&hybrid - &direct)) / fro(&direct));

    let y_b = project_to_beams(&y, &[15, 16, 17], &cb)?;
    println!("beamspace data: {} beams x {} snapshots", y_b.channels(), y_b.snapshots());
    Ok(())
}
