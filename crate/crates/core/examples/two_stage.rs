//! The full two-stage estimator on one realization, with errors before and
//! after refinement.

use beamspace_doa::array::{generate_snapshots, Scenario};
use beamspace_doa::harness::pipeline::{run_pipeline, PipelineContext, PipelineId, PipelineSettings};
use beamspace_doa::coarse::InvarianceSolver;
use beamspace_doa::fine::EigenMap;
use beamspace_doa::metrics::matched_errors;
use beamspace_doa::rng::TrialStreams;
use beamspace_doa::selection::{default_sector_width, SelectionParams};

fn main() -> beamspace_doa::Result<()> {
    let m = 32;
    let settings = PipelineSettings {
        n_rf_coarse: 12,
        k_f: 2,
        coarse_solver: InvarianceSolver::Tls,
        fine_solver: InvarianceSolver::Ls,
        eigen_map: EigenMap::Arctangent,
        grid_factor: 4,
        ridge: 1e-10,
        selection: SelectionParams::default(),
        w_sec: default_sector_width(m),
        timing: true,
    };
    let ctx = PipelineContext::new(m, settings)?;
    let scen = Scenario::with_asnr(m, vec![-2.1, 0.5, 2.5], vec![0.95, 0.5, 0.1], 6.0, 100, 2024)?;
    let y = generate_snapshots(&scen, &mut TrialStreams::new(scen.seed, 0)).y;

    for id in PipelineId::ALL {
        let out = run_pipeline(id, &y, &scen.mu, &ctx);
        match &out.mu_hat {
            Some(mu) => {
                let err = matched_errors(mu, &scen.mu)?;
                let t = out.timings.unwrap_or_default();
                println!("{id:<17} beams {:<20} errors [{}]  total {:.3} ms", format!("{:?}", out.beams), sci(&err), t.t_total);
            }
            None => println!("{id:<17} aborted: {}", out.abort.unwrap_or("?")),
        }
    }
    Ok(())
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}
