//! Solves div Y = q on a sieve mesh with the Hagen-Poiseuille cut-off lift.
use std::sync::Arc;

use sieveflow::analysis::divergence_lift;
use sieveflow::geometry::{generate_layout, LayoutStrategy, PerforationParams, PipeParams};
use sieveflow::mesh::{mesh_sieve_pipe, MeshResolution};

fn main() -> sieveflow::Result<()> {
    let pipe = PipeParams::new(1.0, 2.0, 2)?;
    let params = PerforationParams::new(0.6, 1.0, 0.75, 0.25, 0.6)?;
    let layout = generate_layout(pipe, params, &LayoutStrategy::SquareLattice { pitch: None })?;
    let res = MeshResolution {
        h_far: 0.2,
        h_hole: layout.min_hole_radius().unwrap() / 3.0,
        ..Default::default()
    };
    let mesh = Arc::new(mesh_sieve_pipe(&layout, &res)?);
    let lift = divergence_lift(&mesh, &|x| 1.0 + x[0] * x[1] + x[1].sin())?;
    println!("int q = {:.6} (exact 8)", lift.q_outlet_flux);
    println!("discrete unit flux {:.6}", lift.discrete_unit_flux);
    println!("||div Y - q|| / ||q|| = {:.2e}", lift.residual);
    println!("||grad Y|| / ||q|| = {:.3}", lift.gradient_ratio);
    Ok(())
}
