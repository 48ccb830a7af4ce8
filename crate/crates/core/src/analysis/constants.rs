//! Discrete Rayleigh-quotient estimates of the trace and Poincare constants,
//! the Bogovskii witness problem and the divergence lift.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assemble::{
    divergence_matrix, factorial, grad_div_load, grad_div_matrix, scalar_mass, scalar_stiffness, section_mass, viscous_matrix, RefTables,
};
use crate::fem::element::point_of;
use crate::fem::quadrature::gauss_legendre;
use crate::fem::{build_space, BcProfile, FunctionSpace};
use crate::geometry::PipeParams;
use crate::mesh::{FacetTag, Region, SieveMesh};
use crate::sparse::{dot, norm2, Csr, LuSolver};

const POWER_TOL: f64 = 1e-9;
const POWER_MAX: usize = 5000;

/// Largest `lambda` of `M x = lambda K x` restricted to free scalar nodes.
fn power_iteration(k: &Csr, m: &Csr, free: &[bool]) -> Result<f64> {
    let mut map = vec![usize::MAX; free.len()];
    let mut n = 0;
    for (i, &f) in free.iter().enumerate() {
        if f {
            map[i] = n;
            n += 1;
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    let kf = k.restrict(&map, n, &map, n);
    let mf = m.restrict(&map, n, &map, n);
    if mf.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let lu = LuSolver::from_csr(&kf)?;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i as f64).sin()).collect();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX {
        let mx = mf.matvec(&x);
        let y = lu.solve(&mx)?;
        let my = mf.matvec(&y);
        let ky = kf.matvec(&y);
        let new = dot(&y, &my) / dot(&y, &ky);
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        x = y.iter().map(|v| v / ny).collect();
        if (new - lambda).abs() <= POWER_TOL * new.abs() {
            return Ok(new);
        }
        lambda = new;
    }
    Err(Error::Eigen(format!(
        "power iteration did not settle in {POWER_MAX} steps (last estimate {lambda:.6e})"
    )))
}

fn scalar_space(mesh: Arc<SieveMesh>) -> Result<FunctionSpace> {
    build_space(mesh, BcProfile::NoSlip)
}

/// `sup ||phi||_{L2(Sigma)} / ||grad phi||` over P2 fields vanishing on the
/// walls (lateral and sieve); zero when the section has no hole.
pub fn estimate_trace_constant(mesh: &Arc<SieveMesh>) -> Result<f64> {
    let space = scalar_space(mesh.clone())?;
    let tables = RefTables::new(space.dim, 2);
    let k = scalar_stiffness(&space, &tables);
    let m = section_mass(&space);
    let fixed = space.nodes_on_tags(&[FacetTag::Lateral, FacetTag::Sieve]);
    let free: Vec<bool> = fixed.iter().map(|f| !f).collect();
    Ok(power_iteration(&k, &m, &free)?.sqrt())
}

/// `sup ||phi||_{L2} / ||grad phi||` over P2 fields vanishing on the lateral wall.
pub fn estimate_poincare_constant(mesh: &Arc<SieveMesh>) -> Result<f64> {
    let space = scalar_space(mesh.clone())?;
    let tables = RefTables::new(space.dim, 4);
    let k = scalar_stiffness(&space, &tables);
    let m = scalar_mass(&space, &tables);
    let fixed = space.nodes_on_tags(&[FacetTag::Lateral]);
    let free: Vec<bool> = fixed.iter().map(|f| !f).collect();
    Ok(power_iteration(&k, &m, &free)?.sqrt())
}

/// `int psi_k q` for every vertex.
fn p1_moments(space: &FunctionSpace, tables: &RefTables, q: &dyn Fn([f64; 3]) -> f64) -> Vec<f64> {
    let mesh = &space.mesh;
    let dim = mesh.dim;
    let mut out = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        let cell = mesh.cell(c);
        for qi in 0..tables.quad.len() {
            let lam = &tables.lam[qi];
            let w = tables.quad.weights[qi] * space.geom[c].measure * factorial(dim) * q(point_of(dim, &pts, lam));
            for (i, &v) in cell.iter().enumerate() {
                out[v] += w * lam[i];
            }
        }
    }
    out
}

/// `int psi_k div u` for a full-DOF velocity.
fn divergence_moments(space: &FunctionSpace, tables: &RefTables, u: &[f64]) -> Vec<f64> {
    let mesh = &space.mesh;
    let dim = mesh.dim;
    let mut out = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        for qi in 0..tables.quad.len() {
            let lam = &tables.lam[qi];
            let (_, g) = space.velocity_at(u, c, lam);
            let div: f64 = (0..dim).map(|d| g[d][d]).sum();
            let w = tables.quad.weights[qi] * space.geom[c].measure * factorial(dim) * div;
            for (i, &v) in cell.iter().enumerate() {
                out[v] += w * lam[i];
            }
        }
    }
    out
}

/// Minimal-gradient `v` in the no-slip space with `int psi_k div v = g_k`
/// for all vertices. Fails when `g` has nonzero total on a connected
/// component (net flux through a solid wall).
///
/// With `grad_div = Some((gamma, G, l))` the functional becomes
/// `||grad v||^2 + gamma ||div v - r||^2` (`G`, `l` the grad-div matrix and
/// load of `r`), which drives the pointwise divergence towards `r`.
fn min_norm_divergence(
    space: &FunctionSpace,
    tables: &RefTables,
    g: &[f64],
    grad_div: Option<(f64, &Csr, &[f64])>,
) -> Result<Vec<f64>> {
    let mesh = &space.mesh;
    let comp_of_cell = mesh.components();
    let n_comp = comp_of_cell.iter().max().map_or(0, |m| m + 1);
    let mut comp = vec![0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        for &v in mesh.cell(c) {
            comp[v] = comp_of_cell[c];
        }
    }
    let scale: f64 = g.iter().map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    for k in 0..n_comp {
        let total: f64 = (0..g.len()).filter(|&v| comp[v] == k).map(|v| g[v]).sum();
        if total.abs() > 1e-9 * scale {
            return Err(Error::Infeasible(format!(
                "divergence data has total {total:.6e} on a component enclosed by walls"
            )));
        }
    }
    let mut a = viscous_matrix(space, tables);
    if let Some((gamma, gd, _)) = grad_div {
        a = a.plus_scaled(gamma, gd);
    }
    let b = divergence_matrix(space, tables);
    let nf = space.n_free();
    let np = space.n_pressure();
    let mass = crate::fem::assemble::pressure_mass_lumped(space);
    let mut t = crate::sparse::saddle_triplets(&a, &b, None);
    for v in 0..np {
        t.push((nf + v, nf + np + comp[v], mass[v]));
        t.push((nf + np + comp[v], nf + v, mass[v]));
    }
    let n = nf + np + n_comp;
    let lu = LuSolver::from_triplets(n, &t)?;
    let mut rhs = vec![0.0; n];
    for v in 0..np {
        rhs[nf + v] = -g[v];
    }
    if let Some((gamma, _, l)) = grad_div {
        for (r, li) in rhs.iter_mut().zip(l) {
            *r = gamma * li;
        }
    }
    let x = lu.solve(&rhs)?;
    Ok(x[..nf].to_vec())
}

/// `||grad v*|| / ||g*||` for the minimal-gradient `v*` vanishing on the whole
/// boundary with `div v* = g*`, `g* = -1` below the sieve and `+1` above.
pub fn bogovskii_witness(mesh: &Arc<SieveMesh>) -> Result<f64> {
    let space = scalar_space(mesh.clone())?;
    let tables = RefTables::new(space.dim, 4);
    let g = region_moments(&space, &|r| if r == Region::Minus { -1.0 } else { 1.0 });
    let v = min_norm_divergence(&space, &tables, &g, None)?;
    let grad = crate::solve::dirichlet_norm(&space, &space.to_full(&v), None);
    Ok(grad / mesh.volume().sqrt())
}

/// Moments of a per-region constant (exact: `|K| / (d + 1)` per vertex).
fn region_moments(space: &FunctionSpace, value: &dyn Fn(Region) -> f64) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let share = value(mesh.regions[c]) * space.geom[c].measure / (mesh.dim + 1) as f64;
        for &v in mesh.cell(c) {
            out[v] += share;
        }
    }
    out
}

/// Hagen-Poiseuille field with unit flow rate.
#[derive(Debug, Clone, Copy)]
pub struct HagenPoiseuille {
    pub pipe: PipeParams,
}

pub fn hagen_poiseuille(pipe: PipeParams) -> HagenPoiseuille {
    HagenPoiseuille { pipe }
}

impl HagenPoiseuille {
    /// Axial velocity at `x`.
    pub fn axial(&self, x: [f64; 3]) -> f64 {
        let r = self.pipe.radius;
        if self.pipe.dim == 3 {
            2.0 / (std::f64::consts::PI * r.powi(4)) * (r * r - x[0] * x[0] - x[1] * x[1])
        } else {
            3.0 / (4.0 * r.powi(3)) * (r * r - x[0] * x[0])
        }
    }

    /// `int_{Gamma_O} U_0 . k` by Gauss quadrature on the exact section.
    pub fn outlet_flux(&self) -> f64 {
        let r = self.pipe.radius;
        let (t, w) = gauss_legendre(4);
        if self.pipe.dim == 3 {
            // radial Gauss on [0, R]; the integrand is radial
            let mut s = 0.0;
            for (ti, wi) in t.iter().zip(&w) {
                let rho = ti * r;
                s += wi * r * 2.0 * std::f64::consts::PI * rho * self.axial([rho, 0.0, 0.0]);
            }
            s
        } else {
            t.iter().zip(&w).map(|(ti, wi)| wi * 2.0 * r * self.axial([-r + 2.0 * r * ti, 0.0, 0.0])).sum()
        }
    }
}

/// Result of the divergence lift.
#[derive(Debug, Clone)]
pub struct Lift {
    pub space: Arc<FunctionSpace>,
    /// Full-DOF velocity `Y = Q + X`.
    pub y: Vec<f64>,
    /// Full-DOF closed-form part `Q`.
    pub q_part: Vec<f64>,
    /// `int_{Gamma_O} Q . k`, discrete.
    pub q_outlet_flux: f64,
    /// Discrete outlet flux of the interpolated unit Hagen-Poiseuille field.
    pub discrete_unit_flux: f64,
    pub gradient_ratio: f64,
    /// `||div Y - q|| / ||q||`.
    pub residual: f64,
}

/// `Y = Q + X` with `div Y = q` weakly: `Q` the closed-form cut-off Hagen-Poiseuille
/// lift carrying `int q` out through the outlet, `X` the minimal-gradient
/// no-slip correction.
pub fn divergence_lift(mesh: &Arc<SieveMesh>, q: &(dyn Fn([f64; 3]) -> f64 + Sync)) -> Result<Lift> {
    divergence_lift_with(mesh, q, LIFT_GRAD_DIV)
}

/// Weight of the grad-div term in the correction problem of [`divergence_lift`].
pub const LIFT_GRAD_DIV: f64 = 1e5;

/// [`divergence_lift`] with an explicit grad-div weight (`0` gives the plain
/// minimal-gradient correction).
pub fn divergence_lift_with(mesh: &Arc<SieveMesh>, q: &(dyn Fn([f64; 3]) -> f64 + Sync), gamma: f64) -> Result<Lift> {
    let pipe = *mesh.pipe();
    let h = pipe.half_length;
    let dim = mesh.dim;
    let hp = hagen_poiseuille(pipe);
    let eps_space = Arc::new(build_space(mesh.clone(), BcProfile::EpsLevel)?);
    let tables = RefTables::new(dim, 4);
    let g = p1_moments(&eps_space, &tables, q);
    let total: f64 = g.iter().sum();

    let mut unit = eps_space.interpolate(|x| {
        let mut v = [0.0; 3];
        v[dim - 1] = hp.axial(x);
        v
    });
    eps_space.apply_constraints(&mut unit);
    let outlet = crate::fem::assemble::axial_facet_load_full(&eps_space, |t| {
        if t == FacetTag::Outlet {
            1.0
        } else {
            0.0
        }
    });
    let discrete_unit_flux = dot(&outlet, &unit);
    let mut q_part = eps_space.interpolate(|x| {
        let z = x[dim - 1];
        let mut v = [0.0; 3];
        v[dim - 1] = total * z * (z + h) / (2.0 * h * h) * hp.axial(x) / discrete_unit_flux;
        v
    });
    eps_space.apply_constraints(&mut q_part);
    let q_outlet_flux = dot(&outlet, &q_part);

    let div_q = divergence_moments(&eps_space, &tables, &q_part);
    let rest: Vec<f64> = g.iter().zip(&div_q).map(|(a, b)| a - b).collect();
    let ns = scalar_space(mesh.clone())?;
    let x = if rest.iter().all(|v| *v == 0.0) {
        vec![0.0; ns.n_free()]
    } else {
        let gd = (gamma > 0.0).then(|| {
            let m = grad_div_matrix(&ns, &tables);
            let l = grad_div_load(&ns, &tables, |c, lam| {
                let (_, gq) = eps_space.velocity_at(&q_part, c, lam);
                let x = point_of(dim, &mesh.cell_points(c), lam);
                q(x) - (0..dim).map(|d| gq[d][d]).sum::<f64>()
            });
            (m, l)
        });
        min_norm_divergence(&ns, &tables, &rest, gd.as_ref().map(|(m, l)| (gamma, m, l.as_slice())))?
    };
    let x_full = ns.to_full(&x);
    let y: Vec<f64> = q_part.iter().zip(&x_full).map(|(a, b)| a + b).collect();

    let q_norm = p1_free_l2(&eps_space, &tables, q);
    let (mut res, mut grad) = (0.0, 0.0);
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        for qi in 0..tables.quad.len() {
            let lam = &tables.lam[qi];
            let (_, gy) = eps_space.velocity_at(&y, c, lam);
            let div: f64 = (0..dim).map(|d| gy[d][d]).sum();
            let w = tables.quad.weights[qi] * eps_space.geom[c].measure * factorial(dim);
            res += w * (div - q(point_of(dim, &pts, lam))).powi(2);
            grad += w * gy.iter().flatten().map(|v| v * v).sum::<f64>();
        }
    }
    let (residual, gradient_ratio) = if q_norm > 0.0 {
        (res.sqrt() / q_norm, grad.sqrt() / q_norm)
    } else {
        (0.0, 0.0)
    };
    Ok(Lift {
        space: eps_space,
        y,
        q_part,
        q_outlet_flux,
        discrete_unit_flux,
        gradient_ratio,
        residual,
    })
}

fn p1_free_l2(space: &FunctionSpace, tables: &RefTables, q: &dyn Fn([f64; 3]) -> f64) -> f64 {
    let mesh = &space.mesh;
    let dim = mesh.dim;
    let mut s = 0.0;
    for c in 0..mesh.n_cells() {
        let pts = mesh.cell_points(c);
        for qi in 0..tables.quad.len() {
            let w = tables.quad.weights[qi] * space.geom[c].measure * factorial(dim);
            s += w * q(point_of(dim, &pts, &tables.lam[qi])).powi(2);
        }
    }
    s.sqrt()
}

/// Constants of one mesh with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalConstants {
    pub epsilon: Option<f64>,
    pub r_eps: Option<f64>,
    pub trace_const: f64,
    pub poincare_const: f64,
    /// `f64::INFINITY` when the witness data is infeasible (no hole).
    pub bogovskii_lower: f64,
    pub n_cells: usize,
    pub h_far: f64,
    pub h_hole: f64,
}

pub fn functional_constants(mesh: &Arc<SieveMesh>) -> Result<FunctionalConstants> {
    let trace_const = estimate_trace_constant(mesh)?;
    let poincare_const = estimate_poincare_constant(mesh)?;
    let bogovskii_lower = match bogovskii_witness(mesh) {
        Ok(v) => v,
        Err(Error::Infeasible(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let layout = mesh.provenance.layout.as_ref();
    Ok(FunctionalConstants {
        epsilon: layout.map(|l| l.epsilon),
        r_eps: layout.map(|l| crate::geometry::hole_radius(l.epsilon, l.alpha).unwrap_or(f64::NAN)),
        trace_const,
        poincare_const,
        bogovskii_lower,
        n_cells: mesh.n_cells(),
        h_far: mesh.provenance.resolution.h_far,
        h_hole: mesh.provenance.resolution.h_hole,
    })
}
