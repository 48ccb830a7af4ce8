//! A short epsilon sweep, printed as the CSV the CLI writes.
use sieveflow::analysis::{run_sweep, SweepSpec};
use sieveflow::fem::Forcing;
use sieveflow::geometry::{LayoutStrategy, PipeParams};
use sieveflow::mesh::MeshResolution;
use sieveflow::solve::SolverConfig;

fn main() -> sieveflow::Result<()> {
    let spec = SweepSpec {
        pipe: PipeParams::new(1.0, 2.0, 2)?,
        epsilons: vec![0.6, 0.5, 0.4],
        alpha: 1.0,
        delta0: 0.75,
        delta1: 0.25,
        epsilon_star: 0.6,
        strategy: LayoutStrategy::SquareLattice { pitch: None },
        p_minus: 1.0,
        p_plus: 0.0,
        forcing: Forcing::Zero,
        resolution: MeshResolution {
            h_far: 0.25,
            h_hole: 0.01,
            ..Default::default()
        },
        solver: SolverConfig::default(),
        quadrature_degree: 5,
        constants: false,
        hole_cells: 4.0,
        stations: 5,
        warm_start: true,
    };
    let report = run_sweep(&spec)?;
    print!("{}", report.to_csv());
    println!("flux ~ r_eps^{:.3}", report.flux_vs_r.exponent);
    Ok(())
}
