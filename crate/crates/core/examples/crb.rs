//! Stochastic CRB across ASNR and the failure threshold it implies.

use beamspace_doa::array::Scenario;
use beamspace_doa::metrics::{stochastic_crb, wilson_interval, WILSON_Z95};

fn main() -> beamspace_doa::Result<()> {
    println!("{:>8} {:>12} {:>14}", "ASNR dB", "sqrt(CRB)", "3 sqrt(CRB)");
    for asnr in [-5.0, 0.0, 3.0, 6.0, 10.0, 15.0] {
        let scen = Scenario::with_asnr(32, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], asnr, 100, 0)?;
        let crb = stochastic_crb(&scen)?.crb;
        println!("{asnr:>8.1} {:>12.4e} {:>14.4e}", crb.sqrt(), 3.0 * crb.sqrt());
    }
    for (k, n) in [(0, 1000), (12, 1000), (500, 1000)] {
        let (lo, hi) = wilson_interval(k, n, WILSON_Z95);
        println!("{k}/{n} failures: 95% interval [{lo:.4}, {hi:.4}]");
    }
    Ok(())
}
