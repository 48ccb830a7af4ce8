//! Diagnostics of discrete states: fluxes, traces, norms, the pressure split
//! and distances to the limit states.

mod constants;
mod sweep;

pub use constants::{
    bogovskii_witness, divergence_lift, divergence_lift_with, estimate_poincare_constant, estimate_trace_constant, functional_constants,
    hagen_poiseuille, FunctionalConstants, Lift, LIFT_GRAD_DIV,
};
pub use sweep::{run_sweep, spread_ratio, Fit, SweepReport, SweepRow, SweepSpec};

use crate::fem::assemble::{axial_facet_load_full, facet_measure, factorial, section_facets, RefTables};
use crate::fem::FunctionSpace;
use crate::mesh::{FacetTag, PointLocator, Region};
use crate::solve::FlowState;
use crate::sparse::dot;

/// Intersection of cell `c` with the plane `z = s`, as sub-simplices given by
/// cell barycentrics, with their measures.
fn plane_cut(space: &FunctionSpace, c: usize, s: f64) -> Vec<(Vec<[f64; 4]>, f64)> {
    let mesh = &space.mesh;
    let dim = mesh.dim;
    let ax = dim - 1;
    let h = mesh.pipe().half_length;
    let tol = 1e-12 * h;
    let pts = mesh.cell_points(c);
    let zs: Vec<f64> = pts.iter().map(|p| p[ax]).collect();
    let zmin = zs.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let take = if s >= h - tol {
        zmax >= s - tol && zmin < s - tol
    } else {
        zmin <= s + tol && zmax > s + tol
    };
    if !take {
        return Vec::new();
    }
    let d: Vec<f64> = zs.iter().map(|z| if (z - s).abs() <= tol { 0.0 } else { z - s }).collect();
    let mut cut: Vec<[f64; 4]> = Vec::new();
    for i in 0..=dim {
        if d[i] == 0.0 {
            let mut l = [0.0; 4];
            l[i] = 1.0;
            cut.push(l);
        }
    }
    for i in 0..=dim {
        for j in i + 1..=dim {
            if d[i] * d[j] < 0.0 {
                let t = d[i] / (d[i] - d[j]);
                let mut l = [0.0; 4];
                l[i] = 1.0 - t;
                l[j] = t;
                cut.push(l);
            }
        }
    }
    let phys = |l: &[f64; 4]| crate::fem::element::point_of(dim, &pts, l);
    if dim == 2 {
        if cut.len() < 2 {
            return Vec::new();
        }
        let len = (phys(&cut[0])[0] - phys(&cut[1])[0]).abs();
        return vec![(vec![cut[0], cut[1]], len)];
    }
    if cut.len() < 3 {
        return Vec::new();
    }
    let xy: Vec<[f64; 3]> = cut.iter().map(phys).collect();
    let cx = xy.iter().map(|p| p[0]).sum::<f64>() / xy.len() as f64;
    let cy = xy.iter().map(|p| p[1]).sum::<f64>() / xy.len() as f64;
    let mut order: Vec<usize> = (0..cut.len()).collect();
    order.sort_by(|&a, &b| {
        let ta = (xy[a][1] - cy).atan2(xy[a][0] - cx);
        let tb = (xy[b][1] - cy).atan2(xy[b][0] - cx);
        ta.total_cmp(&tb)
    });
    let mut out = Vec::new();
    for k in 1..order.len() - 1 {
        let (a, b, e) = (order[0], order[k], order[k + 1]);
        let area = 0.5
            * ((xy[b][0] - xy[a][0]) * (xy[e][1] - xy[a][1]) - (xy[e][0] - xy[a][0]) * (xy[b][1] - xy[a][1])).abs();
        out.push((vec![cut[a], cut[b], cut[e]], area));
    }
    out
}

/// Flux `int_{z = s} u . k` through the cross-section at station `s`.
pub fn flux(state: &FlowState, s: f64) -> f64 {
    let space = &state.space;
    let dim = space.dim;
    let ft = RefTables::new(dim - 1, 4);
    let mut total = 0.0;
    for c in 0..space.mesh.n_cells() {
        for (corners, meas) in plane_cut(space, c, s) {
            for q in 0..ft.quad.len() {
                let fl = &ft.lam[q];
                let mut lam = [0.0; 4];
                for (k, corner) in corners.iter().enumerate() {
                    for i in 0..4 {
                        lam[i] += fl[k] * corner[i];
                    }
                }
                let (u, _) = space.velocity_at(&state.u, c, &lam);
                total += ft.quad.weights[q] * factorial(dim - 1) * meas * u[dim - 1];
            }
        }
    }
    total
}

/// `int_{tag} u . k` over inlet or outlet facets.
pub fn boundary_flux(state: &FlowState, tag: FacetTag) -> f64 {
    let w = axial_facet_load_full(&state.space, |t| if t == tag { 1.0 } else { 0.0 });
    dot(&w, &state.u)
}

/// Flux at evenly spaced stations `-h + 2h k / (n - 1)`.
pub fn flux_stations(state: &FlowState, n: usize) -> Vec<(f64, f64)> {
    let pipe = state.mesh().pipe();
    let (lo, hi) = match state.mesh().provenance.kind {
        crate::mesh::MeshKind::HalfMinus => (-pipe.half_length, 0.0),
        crate::mesh::MeshKind::HalfPlus => (0.0, pipe.half_length),
        _ => (-pipe.half_length, pipe.half_length),
    };
    (0..n)
        .map(|k| {
            let s = lo + (hi - lo) * k as f64 / (n - 1).max(1) as f64;
            (s, flux(state, s))
        })
        .collect()
}

/// `||u||_{L2(Sigma)}` over the plane `z = 0`, holes included.
pub fn trace_norm_sigma(state: &FlowState) -> f64 {
    let space = &state.space;
    let mesh = &space.mesh;
    let dim = space.dim;
    let fdim = dim - 1;
    let ft = RefTables::new(fdim, 4);
    let mut s = 0.0;
    for (c, slots) in section_facets(space) {
        let pts = mesh.cell_points(c);
        let fp: Vec<[f64; 3]> = slots.iter().map(|&k| pts[k]).collect();
        let meas = facet_measure(dim, &fp);
        for q in 0..ft.quad.len() {
            let mut lam = [0.0; 4];
            for (k, &slot) in slots.iter().enumerate() {
                lam[slot] = ft.lam[q][k];
            }
            let (u, _) = space.velocity_at(&state.u, c, &lam);
            let w = ft.quad.weights[q] * factorial(fdim) * meas;
            s += w * u[..dim].iter().map(|v| v * v).sum::<f64>();
        }
    }
    s.sqrt()
}

/// Mean and fluctuation of the Bernoulli pressure on one half.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSplit {
    pub mean: f64,
    /// `Phi - mean` at every vertex (meaningful on this region's vertices).
    pub fluctuation: Vec<f64>,
    pub fluctuation_norm: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureSplit {
    pub minus: Option<RegionSplit>,
    pub plus: Option<RegionSplit>,
}

/// `Phi = P + phi` on each half with `phi` the region mean.
pub fn pressure_split(state: &FlowState) -> PressureSplit {
    let split = |r: Region| -> Option<RegionSplit> {
        let mesh = state.mesh();
        let dim = mesh.dim;
        let mut vol = 0.0;
        let mut int = 0.0;
        for c in 0..mesh.n_cells() {
            if mesh.regions[c] != r {
                continue;
            }
            let m = state.space.geom[c].measure;
            vol += m;
            int += m / (dim + 1) as f64 * mesh.cell(c).iter().map(|&v| state.phi[v]).sum::<f64>();
        }
        if vol == 0.0 {
            return None;
        }
        let mean = int / vol;
        let fluctuation: Vec<f64> = state.phi.iter().map(|p| p - mean).collect();
        let fluctuation_norm = scalar_l2(&state.space, &fluctuation, Some(r));
        Some(RegionSplit {
            mean,
            fluctuation,
            fluctuation_norm,
            volume: vol,
        })
    };
    PressureSplit {
        minus: split(Region::Minus),
        plus: split(Region::Plus),
    }
}

/// L2 norm of a P1 vertex field over a region (exact for P1).
pub fn scalar_l2(space: &FunctionSpace, p: &[f64], region: Option<Region>) -> f64 {
    let mesh = &space.mesh;
    let dim = mesh.dim;
    let mut s = 0.0;
    for c in 0..mesh.n_cells() {
        if region.is_some_and(|r| mesh.regions[c] != r) {
            continue;
        }
        let v: Vec<f64> = mesh.cell(c).iter().map(|&i| p[i]).collect();
        let sum: f64 = v.iter().sum();
        let sq: f64 = v.iter().map(|x| x * x).sum();
        // int (sum lam_i v_i)^2 = |K| (sum^2 + sq) / ((d+1)(d+2))
        s += space.geom[c].measure * (sum * sum + sq) / ((dim + 1) * (dim + 2)) as f64;
    }
    s.sqrt()
}

/// `(||u||_{L2}, ||grad u||_{L2})` over a region.
pub fn velocity_norms(space: &FunctionSpace, u: &[f64], region: Option<Region>) -> (f64, f64) {
    let dim = space.dim;
    let tables = RefTables::new(dim, 4);
    let mesh = &space.mesh;
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..mesh.n_cells() {
        if region.is_some_and(|r| mesh.regions[c] != r) {
            continue;
        }
        for q in 0..tables.quad.len() {
            let (v, g) = space.velocity_at(u, c, &tables.lam[q]);
            let w = tables.quad.weights[q] * space.geom[c].measure * factorial(dim);
            l2 += w * v.iter().map(|x| x * x).sum::<f64>();
            h1 += w * g.iter().flatten().map(|x| x * x).sum::<f64>();
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// `(||u - u_ex||_{L2}, ||grad (u - u_ex)||_{L2})` against a closed-form field
/// returning value and gradient `g[i][j] = d u_i / d x_j`.
pub fn velocity_error(
    space: &FunctionSpace,
    u: &[f64],
    exact: &dyn Fn([f64; 3]) -> ([f64; 3], [[f64; 3]; 3]),
) -> (f64, f64) {
    let dim = space.dim;
    let tables = RefTables::new(dim, 8);
    let mesh = &space.mesh;
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        for q in 0..tables.quad.len() {
            let lam = &tables.lam[q];
            let (v, g) = space.velocity_at(u, c, lam);
            let (ve, ge) = exact(crate::fem::element::point_of(dim, &pts, lam));
            let w = tables.quad.weights[q] * space.geom[c].measure * factorial(dim);
            for i in 0..dim {
                l2 += w * (v[i] - ve[i]).powi(2);
                for j in 0..dim {
                    h1 += w * (g[i][j] - ge[i][j]).powi(2);
                }
            }
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// Distances from an eps-level state to a limit state on one half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDistance {
    /// `||u_eps - u_lim||_{H1(region)}`.
    pub velocity_h1: f64,
    /// `||Phi_eps - Phi_lim||_{L2(region)}`.
    pub pressure_l2: f64,
}

/// Distances by quadrature on the cells of `state` in `region`, evaluating
/// the limit state through point location on its own mesh.
pub fn distance_to_limit(state: &FlowState, limit: &FlowState, region: Region) -> LimitDistance {
    let space = &state.space;
    let dim = space.dim;
    let tables = RefTables::new(dim, 4);
    let mesh = &space.mesh;
    let loc = PointLocator::new(limit.mesh().clone());
    let (mut du, mut dg, mut dp) = (0.0, 0.0, 0.0);
    for c in 0..mesh.n_cells() {
        if mesh.regions[c] != region {
            continue;
        }
        let pts = mesh.cell_points(c);
        for q in 0..tables.quad.len() {
            let lam = &tables.lam[q];
            let x = crate::fem::element::point_of(dim, &pts, lam);
            let (v, g) = space.velocity_at(&state.u, c, lam);
            let p = space.pressure_at(&state.phi, c, lam);
            let (lc, ll) = loc.locate(x, Some(region));
            let (vl, gl) = limit.space.velocity_at(&limit.u, lc, &ll);
            let pl = limit.space.pressure_at(&limit.phi, lc, &ll);
            let w = tables.quad.weights[q] * space.geom[c].measure * factorial(dim);
            du += w * (0..dim).map(|i| (v[i] - vl[i]).powi(2)).sum::<f64>();
            dg += w * (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).map(|(i, j)| (g[i][j] - gl[i][j]).powi(2)).sum::<f64>();
            dp += w * (p - pl).powi(2);
        }
    }
    LimitDistance {
        velocity_h1: (du + dg).sqrt(),
        pressure_l2: dp.sqrt(),
    }
}

/// `int f . u`.
pub fn forcing_work(state: &FlowState) -> f64 {
    let b = crate::fem::assemble::body_load_full(
        &state.space,
        &RefTables::new(state.space.dim, state.forcing.required_degree().max(4)),
        &state.forcing,
    );
    dot(&b, &state.u)
}

/// `| ||grad u||^2 - int f.u + (p+ - p-) F |` with `F` the outlet flux (or
/// inlet flux on a half pipe without outlet).
pub fn energy_identity_residual(state: &FlowState) -> f64 {
    let e = state.dirichlet_norm().powi(2);
    let f = if state.mesh().has_tag(FacetTag::Outlet) {
        boundary_flux(state, FacetTag::Outlet)
    } else {
        boundary_flux(state, FacetTag::Inlet)
    };
    (e - forcing_work(state) + (state.p_plus - state.p_minus) * f).abs()
}
