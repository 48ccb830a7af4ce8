use proptest::prelude::*;
use sieveflow::geometry::{
    generate_layout, hole_radius, max_hole_count, validate_layout, LayoutStrategy, PerforationLayout,
    PerforationParams, PipeParams, Violation,
};
use sieveflow::Error;

fn lattice(dim: usize, eps: f64, delta1: f64, hex: bool) -> PerforationLayout {
    let pipe = PipeParams::new(1.0, 2.0, dim).unwrap();
    let params = PerforationParams::new(eps, 1.0, 0.5, delta1, 0.95).unwrap();
    let strategy = if hex {
        LayoutStrategy::HexLattice { pitch: None }
    } else {
        LayoutStrategy::SquareLattice { pitch: None }
    };
    generate_layout(pipe, params, &strategy).unwrap()
}

proptest! {
    #[test]
    fn hole_radius_matches_closed_form(eps in 0.1f64..0.95, alpha in 0.3f64..2.0) {
        let r = hole_radius(eps, alpha).unwrap();
        let oracle = (-(1.0 / eps).powf(alpha)).exp();
        prop_assert!(r > 0.0);
        prop_assert!((r - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn hole_radius_increases_with_eps(a in 0.1f64..0.9, d in 1e-3f64..0.05, alpha in 0.3f64..2.0) {
        prop_assert!(hole_radius(a, alpha).unwrap() < hole_radius(a + d, alpha).unwrap());
    }

    #[test]
    fn count_bound_matches_floor(radius in 0.2f64..3.0, delta1 in 0.1f64..1.0, eps in 0.05f64..0.95) {
        let q = radius / (delta1 * eps);
        prop_assert_eq!(max_hole_count(radius, delta1, eps).unwrap(), (q * q).floor() as usize);
    }

    #[test]
    fn lattices_satisfy_every_constraint(
        dim in 2usize..=3,
        eps in 0.2f64..0.9,
        delta1 in 0.2f64..0.9,
        hex in any::<bool>(),
    ) {
        let pipe = PipeParams::new(1.0, 2.0, dim).unwrap();
        let params = PerforationParams::new(eps, 1.0, 0.5, delta1, 0.95).unwrap();
        let strategy = if hex { LayoutStrategy::HexLattice { pitch: None } } else { LayoutStrategy::SquareLattice { pitch: None } };
        match generate_layout(pipe, params, &strategy) {
            Ok(layout) => {
                prop_assert!(validate_layout(&layout).is_valid());
                prop_assert!(layout.len() <= max_hole_count(1.0, delta1, eps).unwrap());
                let rho = 0.5 * 0.5 * (-1.0 / eps).exp();
                for (c, &r) in layout.centers.iter().zip(&layout.hole_radii) {
                    prop_assert!((r - rho).abs() <= 1e-15);
                    let n = if dim == 2 { c[0].abs() } else { c[0].hypot(c[1]) };
                    prop_assert!(n + delta1 * eps < 1.0);
                    if dim == 2 {
                        prop_assert_eq!(c[1], 0.0);
                    }
                }
            }
            Err(e) => prop_assert!(matches!(e, Error::EmptyLayout(_)), "unexpected error {e}"),
        }
    }

    #[test]
    fn layout_json_round_trip(dim in 2usize..=3, eps in 0.2f64..0.7, delta1 in 0.2f64..0.5) {
        let layout = lattice(dim, eps, delta1, false);
        let back = PerforationLayout::from_json(&layout.to_json()).unwrap();
        prop_assert_eq!(back.to_document(), layout.to_document());
    }
}

#[test]
fn overlapping_explicit_centers_are_reported() {
    let pipe = PipeParams::new(1.0, 2.0, 2).unwrap();
    let params = PerforationParams::new(0.6, 1.0, 0.75, 0.25, 0.6).unwrap();
    let err = generate_layout(pipe, params, &LayoutStrategy::Explicit { centers: vec![[0.0, 0.0], [0.2, 0.0]] });
    assert!(matches!(err, Err(Error::Parameter(_))));

    let mut layout = generate_layout(pipe, params, &LayoutStrategy::Explicit { centers: vec![[0.0, 0.0]] }).unwrap();
    layout.centers.push([0.2, 0.0]);
    layout.hole_radii.push(layout.hole_radii[0]);
    let report = validate_layout(&layout);
    assert_eq!(report.violations, vec![Violation::SpacingOverlap { first: 0, second: 1 }]);
}

#[test]
fn guard_larger_than_spacing_is_rejected() {
    let pipe = PipeParams::new(1.0, 2.0, 2).unwrap();
    // delta0 r_eps = 4 * 0.19 > delta1 eps = 0.06
    let params = PerforationParams::new(0.6, 1.0, 4.0, 0.1, 0.6).unwrap();
    let err = generate_layout(pipe, params, &LayoutStrategy::SquareLattice { pitch: None }).unwrap_err();
    assert!(matches!(err, Error::Parameter(_)));
}

#[test]
fn pipe_must_be_longer_than_wide() {
    assert!(PipeParams::new(1.0, 0.5, 2).is_err());
    assert!(PipeParams::new(1.0, 2.0, 4).is_err());
    assert!(PipeParams::new(-1.0, 2.0, 3).is_err());
}

#[test]
fn hex_and_square_agree_on_the_line() {
    let a = lattice(2, 0.4, 0.25, false);
    let b = lattice(2, 0.4, 0.25, true);
    assert_eq!(a.centers, b.centers);
}
