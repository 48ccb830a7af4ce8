use std::sync::Arc;

use proptest::prelude::*;
use sieveflow::analysis::velocity_error;
use sieveflow::fem::assemble::{convection_matrix, divergence_matrix, newton_matrix, viscous_matrix};
use sieveflow::fem::{build_space, simplex_rule, BcProfile, FunctionSpace, ManufacturedSolution, RefTables};
use sieveflow::geometry::{generate_layout, LayoutStrategy, PerforationParams, PipeParams};
use sieveflow::mesh::{mesh_open_pipe, mesh_sieve_pipe, MeshResolution};
use sieveflow::sparse::dot;

fn open_space(dim: usize, h_far: f64, profile: BcProfile) -> FunctionSpace {
    let pipe = PipeParams::new(1.0, 2.0, dim).unwrap();
    let res = MeshResolution {
        h_far,
        h_hole: h_far,
        ..Default::default()
    };
    build_space(Arc::new(mesh_open_pipe(pipe, &res).unwrap()), profile).unwrap()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

proptest! {
    // int_T prod lam_i^a_i = dim! prod a_i! / (sum a_i + dim)! |T|
    #[test]
    fn simplex_rules_integrate_barycentric_monomials(dim in 2usize..=3, degree in 1usize..=8, seed in any::<u64>()) {
        let q = simplex_rule(dim, degree);
        let mut e = [0u32; 4];
        let mut left = degree as u32;
        let r = pseudo_random(4, seed);
        for (i, ei) in e.iter_mut().enumerate().take(dim + 1) {
            let k = ((r[i] + 0.5) * (left + 1) as f64).floor().min(left as f64) as u32;
            *ei = k;
            left -= k;
        }
        let s: f64 = (0..q.len())
            .map(|i| {
                let lam = q.barycentric(i);
                q.weights[i] * (0..=dim).map(|k| lam[k].powi(e[k] as i32)).product::<f64>()
            })
            .sum();
        let total: u32 = e.iter().sum();
        let oracle = e.iter().map(|&k| factorial(k)).product::<f64>() / factorial(total + dim as u32);
        prop_assert!((s - oracle).abs() <= 1e-13 * oracle.max(1e-3), "{e:?}: {s} vs {oracle}");
    }

    #[test]
    fn manufactured_forcing_matches_finite_differences(
        x in -0.9f64..0.9,
        z in -1.9f64..1.9,
        amp in 0.01f64..0.2,
        a in -2.0f64..2.0,
        pm in -1.0f64..2.0,
    ) {
        let ms = ManufacturedSolution { radius: 1.0, half_length: 2.0, p_minus: pm, p_plus: 0.0, velocity_amplitude: amp, pressure_amplitude: a };
        let h = 1e-4;
        let at = |dx: f64, dz: f64| ms.velocity([x + dx, z + dz, 0.0]);
        let u = at(0.0, 0.0);
        let mut g = [[0.0; 2]; 2];
        let mut lap = [0.0; 2];
        for i in 0..2 {
            g[i][0] = (at(h, 0.0)[i] - at(-h, 0.0)[i]) / (2.0 * h);
            g[i][1] = (at(0.0, h)[i] - at(0.0, -h)[i]) / (2.0 * h);
            lap[i] = (at(h, 0.0)[i] + at(-h, 0.0)[i] + at(0.0, h)[i] + at(0.0, -h)[i] - 4.0 * u[i]) / (h * h);
        }
        let phi = |dx: f64, dz: f64| ms.bernoulli([x + dx, z + dz, 0.0]);
        let gphi = [(phi(h, 0.0) - phi(-h, 0.0)) / (2.0 * h), (phi(0.0, h) - phi(0.0, -h)) / (2.0 * h)];
        let mut oracle = [0.0; 2];
        for i in 0..2 {
            let conv: f64 = (0..2).map(|j| (g[i][j] - g[j][i]) * u[j]).sum();
            oracle[i] = -lap[i] + conv + gphi[i];
        }
        let f = ms.forcing([x, z, 0.0]);
        let exact_g = ms.gradient([x, z, 0.0]);
        let scale = 1.0 + oracle[0].abs() + oracle[1].abs();
        for i in 0..2 {
            prop_assert!((f[i] - oracle[i]).abs() <= 1e-4 * scale, "component {i}: {} vs {}", f[i], oracle[i]);
            for j in 0..2 {
                prop_assert!((exact_g[i][j] - g[i][j]).abs() <= 1e-6 * (1.0 + g[i][j].abs()));
            }
        }
        prop_assert!((exact_g[0][0] + exact_g[1][1]).abs() <= 1e-12);
    }

    #[test]
    fn convection_is_skew(dim in 2usize..=3, seed in any::<u64>()) {
        let space = open_space(dim, if dim == 2 { 0.5 } else { 0.8 }, BcProfile::EpsLevel);
        let tables = RefTables::new(dim, 5);
        let w = pseudo_random(space.n_dofs(), seed);
        let c = convection_matrix(&space, &tables, &w);
        let x = pseudo_random(space.n_free(), seed ^ 0x9e37);
        let cx = c.matvec(&x);
        prop_assert!(dot(&x, &cx).abs() <= 1e-12 * c.max_abs() * dot(&x, &x));
    }
}

#[test]
fn manufactured_solution_meets_the_boundary_data() {
    let ms = ManufacturedSolution {
        radius: 1.0,
        half_length: 2.0,
        p_minus: 1.5,
        p_plus: -0.5,
        velocity_amplitude: 0.1,
        pressure_amplitude: 0.7,
    };
    for t in [-0.9, -0.3, 0.0, 0.4, 1.0] {
        for p in [[1.0, 2.0 * t, 0.0], [-1.0, 2.0 * t, 0.0], [t, 0.0, 0.0], [t, 2.0, 0.0], [t, -2.0, 0.0]] {
            let u = ms.velocity(p);
            assert!(u[0].abs() < 1e-14 && u[1].abs() < 1e-14, "{p:?}");
        }
        assert!((ms.bernoulli([t, -2.0, 0.0]) - 1.5).abs() < 1e-14);
        assert!((ms.bernoulli([t, 2.0, 0.0]) + 0.5).abs() < 1e-14);
    }
}

#[test]
fn quadratic_fields_are_reproduced() {
    for dim in [2, 3] {
        let space = open_space(dim, if dim == 2 { 0.4 } else { 0.8 }, BcProfile::NoSlip);
        let field = |x: [f64; 3]| ([x[0] * x[1], x[1] * x[1] - x[0], 0.5 * x[2] * x[0]], [[x[1], x[0], 0.0], [-1.0, 2.0 * x[1], 0.0], [0.5 * x[2], 0.0, 0.5 * x[0]]]);
        let u = space.interpolate(|x| field(x).0);
        let exact = |x: [f64; 3]| {
            let (mut v, mut g) = field(x);
            for i in dim..3 {
                v[i] = 0.0;
                g[i] = [0.0; 3];
            }
            for row in g.iter_mut() {
                for gj in row.iter_mut().skip(dim) {
                    *gj = 0.0;
                }
            }
            (v, g)
        };
        let (e0, e1) = velocity_error(&space, &u, &exact);
        assert!(e0 < 1e-12 && e1 < 1e-11, "dim {dim}: {e0} {e1}");
    }
}

// The parabolic channel profile u = (0, 1 - x^2) is solenoidal, satisfies
// the constraints and has int |grad u|^2 = int 4 x^2 = 8/3 * 2h.
#[test]
fn poiseuille_profile_is_discretely_solenoidal() {
    let space = open_space(2, 0.3, BcProfile::EpsLevel);
    let tables = RefTables::new(2, 5);
    let u = space.to_free(&space.interpolate(|x| [0.0, 1.0 - x[0] * x[0], 0.0]));
    let b = divergence_matrix(&space, &tables);
    let bu = b.matvec(&u);
    assert!(bu.iter().all(|v| v.abs() < 1e-13));
    let a = viscous_matrix(&space, &tables);
    let energy = dot(&u, &a.matvec(&u));
    assert!((energy - 32.0 / 3.0).abs() < 1e-11, "{energy}");
}

#[test]
fn viscous_matrix_is_symmetric_positive() {
    for dim in [2, 3] {
        let space = open_space(dim, if dim == 2 { 0.5 } else { 0.8 }, BcProfile::EpsLevel);
        let tables = RefTables::new(dim, 5);
        let a = viscous_matrix(&space, &tables);
        let t = a.transpose();
        let m = a.max_abs();
        for (i, j, v) in a.triplets() {
            assert!((v - t.get(i, j)).abs() <= 1e-13 * m);
        }
        for seed in 0..4 {
            let x = pseudo_random(space.n_free(), seed);
            assert!(dot(&x, &a.matvec(&x)) > 0.0);
        }
    }
}

// The Newton term is the derivative of u -> E(u) u: compare against a
// difference quotient of the convection action.
#[test]
fn newton_matrix_is_the_convection_derivative() {
    let space = open_space(2, 0.5, BcProfile::EpsLevel);
    let tables = RefTables::new(2, 5);
    let u = space.to_free(&space.interpolate(|x| [0.3 * x[0] * x[1], 1.0 - x[0] * x[0] + 0.2 * x[1], 0.0]));
    let v = pseudo_random(space.n_free(), 7);
    let action = |w: &[f64]| convection_matrix(&space, &tables, &space.to_full(w)).matvec(w);
    let t = 1e-6;
    let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + t * b).collect();
    let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - t * b).collect();
    let fd: Vec<f64> = action(&up).iter().zip(action(&um)).map(|(a, b)| (a - b) / (2.0 * t)).collect();
    let full = space.to_full(&u);
    let j = convection_matrix(&space, &tables, &full).plus_scaled(1.0, &newton_matrix(&space, &tables, &full));
    let jv = j.matvec(&v);
    let scale = jv.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (a, b) in jv.iter().zip(&fd) {
        assert!((a - b).abs() <= 1e-6 * scale);
    }
}

#[test]
fn constraint_profiles_on_the_sieve() {
    let pipe = PipeParams::new(1.0, 2.0, 2).unwrap();
    let params = PerforationParams::new(0.6, 1.0, 0.75, 0.25, 0.6).unwrap();
    let layout = generate_layout(pipe, params, &LayoutStrategy::SquareLattice { pitch: None }).unwrap();
    let res = MeshResolution {
        h_far: 0.3,
        h_hole: 0.02,
        ..Default::default()
    };
    let mesh = Arc::new(mesh_sieve_pipe(&layout, &res).unwrap());
    let eps = build_space(mesh.clone(), BcProfile::EpsLevel).unwrap();
    let noslip = build_space(mesh, BcProfile::NoSlip).unwrap();
    assert!(noslip.n_free() < eps.n_free());
    assert_eq!(eps.n_dofs(), noslip.n_dofs());
    // inlet nodes keep their axial component and lose the transverse one
    let inlet = eps.nodes_on_tags(&[sieveflow::mesh::FacetTag::Inlet]);
    let lateral = eps.nodes_on_tags(&[sieveflow::mesh::FacetTag::Lateral]);
    for n in 0..eps.n_nodes {
        if inlet[n] && !lateral[n] {
            assert!(eps.fixed[2 * n]);
            assert!(!eps.fixed[2 * n + 1]);
        }
        if lateral[n] {
            assert!(eps.fixed[2 * n] && eps.fixed[2 * n + 1]);
        }
    }
}
