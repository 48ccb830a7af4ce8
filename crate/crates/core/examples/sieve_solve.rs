//! Navier-Stokes through a sieve: flux stations, energy identity and pressure split.
use std::sync::Arc;

use sieveflow::analysis::{energy_identity_residual, flux_stations, pressure_split, trace_norm_sigma};
use sieveflow::fem::{BcProfile, Forcing};
use sieveflow::geometry::{generate_layout, LayoutStrategy, PerforationParams, PipeParams};
use sieveflow::mesh::{mesh_sieve_pipe, MeshResolution};
use sieveflow::solve::{solve_on_mesh, SolverConfig};

fn main() -> sieveflow::Result<()> {
    let pipe = PipeParams::new(1.0, 2.0, 2)?;
    let params = PerforationParams::new(0.5, 1.0, 0.75, 0.25, 0.6)?;
    let layout = generate_layout(pipe, params, &LayoutStrategy::SquareLattice { pitch: None })?;
    let res = MeshResolution {
        h_far: 0.2,
        h_hole: layout.min_hole_radius().unwrap() / 5.0,
        ..Default::default()
    };
    let mesh = Arc::new(mesh_sieve_pipe(&layout, &res)?);
    let st = solve_on_mesh(mesh, BcProfile::EpsLevel, 10.0, 0.0, &Forcing::Zero, 5, &SolverConfig::default(), None)?;
    println!("iterations {} converged {}", st.history.len(), st.converged);
    println!("||grad u|| {:.4e}, trace on sieve {:.4e}", st.dirichlet_norm(), trace_norm_sigma(&st));
    for (s, f) in flux_stations(&st, 5) {
        println!("  flux at z = {s:+.2}: {f:.6e}");
    }
    println!("energy identity residual {:.2e}", energy_identity_residual(&st));
    let split = pressure_split(&st);
    for (name, part) in [("minus", split.minus), ("plus", split.plus)] {
        if let Some(p) = part {
            println!("{name}: mean {:.4} fluctuation {:.4e}", p.mean, p.fluctuation_norm);
        }
    }
    Ok(())
}
