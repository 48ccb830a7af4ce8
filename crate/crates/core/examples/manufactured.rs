//! Convergence orders against a manufactured Navier-Stokes solution.
use std::sync::Arc;

use sieveflow::analysis::{velocity_error, Fit};
use sieveflow::fem::{BcProfile, Forcing, ManufacturedSolution};
use sieveflow::geometry::PipeParams;
use sieveflow::mesh::{mesh_open_pipe, refine_uniform, MeshResolution};
use sieveflow::solve::{solve_on_mesh, SolverConfig};

fn main() -> sieveflow::Result<()> {
    let pipe = PipeParams::new(1.0, 2.0, 2)?;
    let solution = ManufacturedSolution {
        radius: 1.0,
        half_length: 2.0,
        p_minus: 1.0,
        p_plus: 0.0,
        velocity_amplitude: 0.05,
        pressure_amplitude: 1.0,
    };
    let forcing = Forcing::Manufactured { solution };
    let res = MeshResolution {
        h_far: 0.5,
        h_hole: 0.5,
        ..Default::default()
    };
    let mut mesh = mesh_open_pipe(pipe, &res)?;
    let (mut hs, mut l2s, mut h1s) = (vec![], vec![], vec![]);
    for level in 0..3 {
        if level > 0 {
            mesh = refine_uniform(&mesh)?;
        }
        let st = solve_on_mesh(Arc::new(mesh.clone()), BcProfile::EpsLevel, 1.0, 0.0, &forcing, 5, &SolverConfig::default(), None)?;
        let (l2, h1) = velocity_error(&st.space, &st.u, &|x| (solution.velocity(x), solution.gradient(x)));
        println!("level {level} cells {:6} L2 {l2:.3e} H1 {h1:.3e}", mesh.n_cells());
        hs.push(0.5 / 2f64.powi(level));
        l2s.push(l2);
        h1s.push(h1);
    }
    println!("orders: L2 {:.2}, H1 {:.2}", Fit::log_log(&hs, &l2s).exponent, Fit::log_log(&hs, &h1s).exponent);
    Ok(())
}
