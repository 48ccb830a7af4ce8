//! Meshes a planar sieve pipe and prints its quality report.
use sieveflow::geometry::{generate_layout, LayoutStrategy, PerforationParams, PipeParams};
use sieveflow::mesh::{mesh_quality, mesh_sieve_pipe, MeshResolution};

fn main() -> sieveflow::Result<()> {
    let pipe = PipeParams::new(1.0, 2.0, 2)?;
    let params = PerforationParams::new(0.6, 1.0, 0.75, 0.25, 0.6)?;
    let layout = generate_layout(pipe, params, &LayoutStrategy::SquareLattice { pitch: None })?;
    let res = MeshResolution {
        h_far: 0.2,
        h_hole: 0.01,
        ..Default::default()
    };
    let mesh = mesh_sieve_pipe(&layout, &res)?;
    let q = mesh_quality(&mesh)?;
    println!("holes {} cells {} vertices {}", layout.len(), q.cell_count, q.vertex_count);
    println!("radius ratio min {:.3} mean {:.3}", q.min_radius_ratio, q.mean_radius_ratio);
    for (tag, m) in &q.tag_measures {
        println!("{:8} {m:.6}", tag.as_str());
    }
    println!("sieve coverage {:.6}, volume {:.6}", q.sieve_coverage, q.volume);
    Ok(())
}
