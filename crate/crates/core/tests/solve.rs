use std::sync::Arc;

use proptest::prelude::*;
use sieveflow::analysis::{boundary_flux, flux, velocity_error};
use sieveflow::fem::{BcProfile, Forcing};
use sieveflow::geometry::{generate_layout, LayoutStrategy, PerforationParams, PipeParams};
use sieveflow::mesh::{mesh_open_pipe, mesh_sieve_pipe, FacetTag, MeshResolution, SieveMesh};
use sieveflow::solve::{read_state, solve_limit_problems, solve_on_mesh, write_state, Mode, SolverConfig};
use sieveflow::sparse::LinearSolverKind;
use sieveflow::Error;

fn open_channel(h_far: f64) -> Arc<SieveMesh> {
    let pipe = PipeParams::new(1.0, 2.0, 2).unwrap();
    let res = MeshResolution {
        h_far,
        h_hole: h_far,
        ..Default::default()
    };
    Arc::new(mesh_open_pipe(pipe, &res).unwrap())
}

fn small_sieve() -> Arc<SieveMesh> {
    let pipe = PipeParams::new(1.0, 2.0, 2).unwrap();
    let params = PerforationParams::new(0.6, 1.0, 0.75, 0.25, 0.6).unwrap();
    let layout = generate_layout(pipe, params, &LayoutStrategy::SquareLattice { pitch: None }).unwrap();
    let res = MeshResolution {
        h_far: 0.3,
        h_hole: 0.02,
        ..Default::default()
    };
    Arc::new(mesh_sieve_pipe(&layout, &res).unwrap())
}

// Channel flow u_z = dp (1 - x^2) / (4h) lies in the P2 space.
#[test]
fn stokes_channel_flow_is_exact() {
    let st = solve_on_mesh(open_channel(0.4), BcProfile::EpsLevel, 1.0, 0.0, &Forcing::Zero, 5, &SolverConfig::stokes(), None)
        .unwrap();
    let exact = |x: [f64; 3]| ([0.0, (1.0 - x[0] * x[0]) / 8.0, 0.0], [[0.0; 3], [-x[0] / 4.0, 0.0, 0.0], [0.0; 3]]);
    let (e0, e1) = velocity_error(&st.space, &st.u, &exact);
    assert!(e0 < 1e-10 && e1 < 1e-10, "{e0} {e1}");
    assert!((flux(&st, 0.7) - 1.0 / 6.0).abs() < 1e-12);
    assert!((boundary_flux(&st, FacetTag::Outlet) - 1.0 / 6.0).abs() < 1e-12);
    for (v, x) in st.phi.iter().zip(&st.mesh().vertices) {
        assert!((v - (1.0 - (x[1] + 2.0) / 4.0)).abs() < 1e-10);
    }
}

#[test]
fn equal_pressures_give_rest() {
    let st = solve_on_mesh(small_sieve(), BcProfile::EpsLevel, 0.4, 0.4, &Forcing::Zero, 5, &SolverConfig::default(), None).unwrap();
    assert!(st.dirichlet_norm() < 1e-12);
    let dev = st.phi.iter().fold(0.0f64, |m, p| m.max((p - 0.4).abs()));
    assert!(dev < 1e-9, "{dev}");
    assert!(st.converged);
}

#[test]
fn reversing_the_drop_reverses_stokes_flow() {
    let mesh = small_sieve();
    let cfg = SolverConfig::stokes();
    let a = solve_on_mesh(mesh.clone(), BcProfile::EpsLevel, 1.0, 0.0, &Forcing::Zero, 5, &cfg, None).unwrap();
    let b = solve_on_mesh(mesh, BcProfile::EpsLevel, 0.0, 1.0, &Forcing::Zero, 5, &cfg, None).unwrap();
    let m = a.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (x, y) in a.u.iter().zip(&b.u) {
        assert!((x + y).abs() <= 1e-10 * m);
    }
}

#[test]
fn navier_stokes_flux_is_below_stokes_flux_for_strong_drops() {
    let mesh = small_sieve();
    let s = solve_on_mesh(mesh.clone(), BcProfile::EpsLevel, 50.0, 0.0, &Forcing::Zero, 5, &SolverConfig::stokes(), None).unwrap();
    let n = solve_on_mesh(mesh, BcProfile::EpsLevel, 50.0, 0.0, &Forcing::Zero, 5, &SolverConfig::default(), None).unwrap();
    assert_eq!(n.mode, Mode::NavierStokes);
    assert!(n.converged);
    assert!(flux(&n, 0.0) < flux(&s, 0.0));
    assert!(flux(&n, 0.0) > 0.0);
}

#[test]
fn direct_and_krylov_agree() {
    let mesh = small_sieve();
    let direct = SolverConfig {
        linear_solver: LinearSolverKind::Direct,
        ..Default::default()
    };
    let krylov = SolverConfig {
        linear_solver: LinearSolverKind::Krylov,
        ..Default::default()
    };
    let a = solve_on_mesh(mesh.clone(), BcProfile::EpsLevel, 1.0, 0.0, &Forcing::Zero, 5, &direct, None).unwrap();
    let b = solve_on_mesh(mesh, BcProfile::EpsLevel, 1.0, 0.0, &Forcing::Zero, 5, &krylov, None).unwrap();
    assert!((flux(&a, 0.0) - flux(&b, 0.0)).abs() < 1e-8 * flux(&a, 0.0));
}

#[test]
fn warm_start_converges_at_once() {
    let mesh = small_sieve();
    let cfg = SolverConfig::default();
    let a = solve_on_mesh(mesh.clone(), BcProfile::EpsLevel, 5.0, 0.0, &Forcing::Zero, 5, &cfg, None).unwrap();
    let b = solve_on_mesh(mesh, BcProfile::EpsLevel, 5.0, 0.0, &Forcing::Zero, 5, &cfg, Some(&a)).unwrap();
    assert!(b.history.len() <= 2, "{:?}", b.history);
    assert!(b.history.len() < a.history.len());
}

#[test]
fn iteration_budget_exhaustion_is_reported() {
    let cfg = SolverConfig {
        max_iterations: 1,
        tolerance: 1e-14,
        ..Default::default()
    };
    let err = solve_on_mesh(small_sieve(), BcProfile::EpsLevel, 200.0, 0.0, &Forcing::Zero, 5, &cfg, None).unwrap_err();
    match err {
        Error::NonConvergence { history } => assert!(!history.is_empty()),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn limit_problems_are_at_rest() {
    let pipe = PipeParams::new(1.0, 2.0, 2).unwrap();
    let res = MeshResolution {
        h_far: 0.3,
        h_hole: 0.3,
        ..Default::default()
    };
    let (m, p) = solve_limit_problems(pipe, 1.0, -0.5, &Forcing::Zero, &res, 5, &SolverConfig::default()).unwrap();
    assert!(m.dirichlet_norm() < 1e-12 && p.dirichlet_norm() < 1e-12);
    assert!(m.phi.iter().all(|v| (v - 1.0).abs() < 1e-10));
    assert!(p.phi.iter().all(|v| (v + 0.5).abs() < 1e-10));
}

#[test]
fn state_text_round_trip() {
    let mesh = small_sieve();
    let st = solve_on_mesh(mesh.clone(), BcProfile::EpsLevel, 1.0, 0.0, &Forcing::Zero, 5, &SolverConfig::default(), None).unwrap();
    let text = write_state(&st);
    let back = read_state(&text, mesh.clone()).unwrap();
    assert_eq!(back.u, st.u);
    assert_eq!(back.phi, st.phi);
    assert_eq!(back.history, st.history);
    assert_eq!(write_state(&back), text);
    assert!(matches!(read_state("nonsense", mesh), Err(Error::Format(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn stokes_response_is_linear_in_the_drop(k in -3.0f64..3.0) {
        let mesh = open_channel(0.5);
        let cfg = SolverConfig::stokes();
        let one = solve_on_mesh(mesh.clone(), BcProfile::EpsLevel, 1.0, 0.0, &Forcing::Zero, 5, &cfg, None).unwrap();
        let st = solve_on_mesh(mesh, BcProfile::EpsLevel, k, 0.0, &Forcing::Zero, 5, &cfg, None).unwrap();
        let m = one.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in one.u.iter().zip(&st.u) {
            prop_assert!((k * a - b).abs() <= 1e-10 * m * (1.0 + k.abs()));
        }
    }

    #[test]
    fn zero_forcing_energy_balances_the_drop(dp in 0.1f64..20.0) {
        let st = solve_on_mesh(small_sieve(), BcProfile::EpsLevel, dp, 0.0, &Forcing::Zero, 5, &SolverConfig::default(), None).unwrap();
        let e2 = st.dirichlet_norm().powi(2);
        let f = boundary_flux(&st, FacetTag::Outlet);
        prop_assert!((e2 - dp * f).abs() <= 1e-9 * e2);
    }
}
