//! Stokes flow in an open pipe against the Hagen-Poiseuille profile.
use std::sync::Arc;

use sieveflow::analysis::{boundary_flux, velocity_error};
use sieveflow::fem::{BcProfile, Forcing};
use sieveflow::geometry::PipeParams;
use sieveflow::mesh::{mesh_open_pipe, FacetTag, MeshResolution};
use sieveflow::solve::{solve_on_mesh, SolverConfig};

fn main() -> sieveflow::Result<()> {
    for dim in [2, 3] {
        let pipe = PipeParams::new(1.0, 2.0, dim)?;
        let res = MeshResolution::default_for_dim(dim);
        let mesh = Arc::new(mesh_open_pipe(pipe, &res)?);
        let st = solve_on_mesh(mesh, BcProfile::EpsLevel, 1.0, 0.0, &Forcing::Zero, 5, &SolverConfig::stokes(), None)?;
        // u_z = G (R^2 - r^2) / (2 (dim - 1)) with G = dp / 2h
        let g = 0.25;
        let c = g / (2.0 * (dim - 1) as f64);
        let exact = |x: [f64; 3]| {
            let mut v = [0.0; 3];
            let mut grad = [[0.0; 3]; 3];
            let lat = dim - 1;
            let r2: f64 = x[..lat].iter().map(|t| t * t).sum();
            v[lat] = c * (1.0 - r2);
            for k in 0..lat {
                grad[lat][k] = -2.0 * c * x[k];
            }
            (v, grad)
        };
        let (l2, h1) = velocity_error(&st.space, &st.u, &exact);
        let flux = if dim == 2 { 1.0 / 6.0 } else { std::f64::consts::PI / 32.0 };
        println!(
            "dim {dim}: outlet flux {:.6} (exact {flux:.6}), L2 error {l2:.2e}, H1 error {h1:.2e}",
            boundary_flux(&st, FacetTag::Outlet)
        );
    }
    Ok(())
}
