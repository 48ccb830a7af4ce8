//! The two decoupled half-pipe problems and the distance of a sieve state to them.
use std::sync::Arc;

use sieveflow::analysis::distance_to_limit;
use sieveflow::fem::{BcProfile, Forcing};
use sieveflow::geometry::{generate_layout, LayoutStrategy, PerforationParams, PipeParams};
use sieveflow::mesh::{mesh_sieve_pipe, MeshResolution, Region};
use sieveflow::solve::{solve_limit_problems, solve_on_mesh, SolverConfig};

fn main() -> sieveflow::Result<()> {
    let pipe = PipeParams::new(1.0, 2.0, 2)?;
    let cfg = SolverConfig::default();
    let coarse = MeshResolution {
        h_far: 0.2,
        h_hole: 0.2,
        ..Default::default()
    };
    let (minus, plus) = solve_limit_problems(pipe, 1.0, 0.0, &Forcing::Zero, &coarse, 5, &cfg)?;
    println!("limit ||grad u||: {:.1e} {:.1e}", minus.dirichlet_norm(), plus.dirichlet_norm());
    for eps in [0.6, 0.45, 0.3] {
        let params = PerforationParams::new(eps, 1.0, 0.75, 0.25, 0.6)?;
        let layout = generate_layout(pipe, params, &LayoutStrategy::SquareLattice { pitch: None })?;
        let res = MeshResolution {
            h_far: 0.2,
            h_hole: (layout.min_hole_radius().unwrap() / 4.0).min(0.01),
            ..Default::default()
        };
        let mesh = Arc::new(mesh_sieve_pipe(&layout, &res)?);
        let st = solve_on_mesh(mesh, BcProfile::EpsLevel, 1.0, 0.0, &Forcing::Zero, 5, &cfg, None)?;
        let dm = distance_to_limit(&st, &minus, Region::Minus);
        let dp = distance_to_limit(&st, &plus, Region::Plus);
        println!(
            "eps {eps:.2}: velocity {:.3e} {:.3e}, pressure {:.3e} {:.3e}",
            dm.velocity_h1, dp.velocity_h1, dm.pressure_l2, dp.pressure_l2
        );
    }
    Ok(())
}
