//! Square and hex lattices of holes on the sieve, with the constraint check.
use sieveflow::geometry::{generate_layout, max_hole_count, validate_layout, LayoutStrategy, PerforationParams, PipeParams};

fn main() -> sieveflow::Result<()> {
    let pipe = PipeParams::new(1.0, 2.0, 3)?;
    for eps in [0.6, 0.45, 0.3] {
        let params = PerforationParams::new(eps, 1.0, 0.75, 0.25, 0.6)?;
        for (name, strategy) in [
            ("square", LayoutStrategy::SquareLattice { pitch: None }),
            ("hex", LayoutStrategy::HexLattice { pitch: None }),
        ] {
            let layout = generate_layout(pipe, params, &strategy)?;
            println!(
                "eps {eps:.2} {name:6} r_eps {:.3e} holes {:4} (bound {}) valid {}",
                layout.r_eps(),
                layout.len(),
                max_hole_count(pipe.radius, 0.25, eps)?,
                validate_layout(&layout).is_valid()
            );
        }
    }
    Ok(())
}
