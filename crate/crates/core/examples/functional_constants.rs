//! Trace, Poincare and Bogovskii constants on perforated and closed walls.
use std::sync::Arc;

use sieveflow::analysis::functional_constants;
use sieveflow::geometry::{generate_layout, LayoutStrategy, PerforationLayout, PerforationParams, PipeParams};
use sieveflow::mesh::{mesh_sieve_pipe, MeshResolution};

fn main() -> sieveflow::Result<()> {
    let pipe = PipeParams::new(1.0, 2.0, 2)?;
    let res = |rho: f64| MeshResolution {
        h_far: 0.2,
        h_hole: (rho / 3.0).min(0.02),
        ..Default::default()
    };
    for eps in [0.6, 0.45, 0.3] {
        let params = PerforationParams::new(eps, 1.0, 0.75, 0.25, 0.6)?;
        let layout = generate_layout(pipe, params, &LayoutStrategy::SquareLattice { pitch: None })?;
        let mesh = Arc::new(mesh_sieve_pipe(&layout, &res(layout.min_hole_radius().unwrap()))?);
        let c = functional_constants(&mesh)?;
        println!(
            "eps {eps:.2} r_eps {:.3e}: trace {:.4e} (/sqrt r {:.3}) poincare {:.4} bogovskii >= {:.3}",
            layout.r_eps(),
            c.trace_const,
            c.trace_const / layout.r_eps().sqrt(),
            c.poincare_const,
            c.bogovskii_lower
        );
    }
    let params = PerforationParams::new(0.6, 1.0, 0.75, 0.25, 0.6)?;
    let wall = PerforationLayout::empty(pipe, params);
    let c = functional_constants(&Arc::new(mesh_sieve_pipe(&wall, &res(0.2))?))?;
    println!("closed wall: trace {} bogovskii {}", c.trace_const, c.bogovskii_lower);
    Ok(())
}
