//! Operators of the discrete weak form
//!
//! `(grad u, grad phi) + ((grad u - grad u^T) u, phi) - (Phi, div phi)
//!   = (f, phi) - p+ int_O phi.k + p- int_I phi.k`,  `(psi, div u) = 0`,
//!
//! assembled over free velocity DOFs. Cell loops run in parallel over chunks
//! and scatter sequentially, so results do not depend on the thread count.

use std::sync::Arc;

use rayon::prelude::*;

use super::element::{n_p2, p2_grads, p2_values, point_of, MAX_P2};
use super::forcing::Forcing;
use super::quadrature::{simplex_rule, Quadrature};
use super::space::FunctionSpace;
use crate::error::{Error, Result};
use crate::mesh::FacetTag;
use crate::sparse::Csr;

const CHUNK: usize = 1024;

/// Reference P2 values at the points of a rule.
#[derive(Debug, Clone)]
pub struct RefTables {
    pub quad: Quadrature,
    pub lam: Vec<[f64; 4]>,
    pub n: Vec<[f64; MAX_P2]>,
}

impl RefTables {
    pub fn new(dim: usize, degree: usize) -> Self {
        let quad = simplex_rule(dim, degree);
        let lam: Vec<[f64; 4]> = (0..quad.len()).map(|q| quad.barycentric(q)).collect();
        let n = lam.iter().map(|l| p2_values(dim, l)).collect();
        RefTables { quad, lam, n }
    }
}

/// Dense local block with global row/column indices (`usize::MAX` skipped).
struct Local {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

fn scatter(n_cells: usize, mat: &mut Csr, local: impl Fn(usize) -> Local + Sync) {
    for start in (0..n_cells).step_by(CHUNK) {
        let end = (start + CHUNK).min(n_cells);
        let locals: Vec<Local> = (start..end).into_par_iter().map(&local).collect();
        for l in locals {
            let nc = l.cols.len();
            for (i, &r) in l.rows.iter().enumerate() {
                if r == usize::MAX {
                    continue;
                }
                for (j, &c) in l.cols.iter().enumerate() {
                    if c != usize::MAX {
                        let v = l.vals[i * nc + j];
                        if v != 0.0 {
                            mat.add(r, c, v);
                        }
                    }
                }
            }
        }
    }
}

fn scatter_vec(n_cells: usize, out: &mut [f64], local: impl Fn(usize) -> (Vec<usize>, Vec<f64>) + Sync) {
    for start in (0..n_cells).step_by(CHUNK) {
        let end = (start + CHUNK).min(n_cells);
        let locals: Vec<_> = (start..end).into_par_iter().map(&local).collect();
        for (idx, vals) in locals {
            for (i, v) in idx.into_iter().zip(vals) {
                if i != usize::MAX {
                    out[i] += v;
                }
            }
        }
    }
}

/// Velocity DOF indices (free numbering) of a cell, node-major.
fn cell_free_dofs(space: &FunctionSpace, c: usize) -> Vec<usize> {
    let dim = space.dim;
    let mut out = Vec::with_capacity(space.nloc * dim);
    for &n in space.cell_nodes(c) {
        for d in 0..dim {
            out.push(space.free_index[n * dim + d]);
        }
    }
    out
}

/// Zero matrix over free velocity DOFs with full node-block coupling.
pub fn velocity_pattern(space: &FunctionSpace) -> Csr {
    let dim = space.dim;
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); space.n_free()];
    for (i, &g) in space.free_dofs.iter().enumerate() {
        let n = g / dim;
        let r = &mut rows[i];
        for &m in &space.node_nbrs[n] {
            for d in 0..dim {
                let f = space.free_index[m * dim + d];
                if f != usize::MAX {
                    r.push(f);
                }
            }
        }
    }
    Csr::with_pattern(space.n_free(), rows)
}

/// Zero matrix over all scalar P2 nodes.
pub fn scalar_pattern(space: &FunctionSpace) -> Csr {
    Csr::with_pattern(space.n_nodes, space.node_nbrs.clone())
}

/// P2 gradients of a cell at every quadrature point.
fn cell_grads(space: &FunctionSpace, tables: &RefTables, c: usize) -> Vec<[[f64; 3]; MAX_P2]> {
    let g = &space.geom[c];
    tables.lam.iter().map(|l| p2_grads(space.dim, l, &g.grad_lam)).collect()
}

pub fn viscous_matrix(space: &FunctionSpace, tables: &RefTables) -> Csr {
    let mut a = velocity_pattern(space);
    let dim = space.dim;
    let nl = space.nloc;
    scatter(space.mesh.n_cells(), &mut a, |c| {
        let dofs = cell_free_dofs(space, c);
        let nd = dofs.len();
        let mut vals = vec![0.0; nd * nd];
        let grads = cell_grads(space, tables, c);
        let meas = space.geom[c].measure;
        for (q, gq) in grads.iter().enumerate() {
            let w = tables.quad.weights[q] * meas * factorial(dim);
            for a_ in 0..nl {
                for b in 0..nl {
                    let s: f64 = (0..dim).map(|d| gq[a_][d] * gq[b][d]).sum::<f64>() * w;
                    for d in 0..dim {
                        vals[(a_ * dim + d) * nd + b * dim + d] += s;
                    }
                }
            }
        }
        Local {
            rows: dofs.clone(),
            cols: dofs,
            vals,
        }
    });
    a
}

/// `B[k, j] = int psi_k div phi_j` over pressure vertices and free velocity DOFs.
pub fn divergence_matrix(space: &FunctionSpace, tables: &RefTables) -> Csr {
    let dim = space.dim;
    let nv = space.n_pressure();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (k, r) in rows.iter_mut().enumerate() {
        for &m in &space.node_nbrs[k] {
            for d in 0..dim {
                let f = space.free_index[m * dim + d];
                if f != usize::MAX {
                    r.push(f);
                }
            }
        }
    }
    let mut b = Csr::with_pattern(space.n_free(), rows);
    let nl = space.nloc;
    scatter(space.mesh.n_cells(), &mut b, |c| {
        let dofs = cell_free_dofs(space, c);
        let nd = dofs.len();
        let verts = space.mesh.cell(c).to_vec();
        let mut vals = vec![0.0; (dim + 1) * nd];
        let grads = cell_grads(space, tables, c);
        let meas = space.geom[c].measure;
        for (q, gq) in grads.iter().enumerate() {
            let w = tables.quad.weights[q] * meas * factorial(dim);
            let lam = &tables.lam[q];
            for k in 0..=dim {
                for b_ in 0..nl {
                    for d in 0..dim {
                        vals[k * nd + b_ * dim + d] += w * lam[k] * gq[b_][d];
                    }
                }
            }
        }
        Local { rows: verts, cols: dofs, vals }
    });
    b
}

/// `int (div phi_i)(div phi_j)` over free velocity DOFs.
pub fn grad_div_matrix(space: &FunctionSpace, tables: &RefTables) -> Csr {
    let mut m = velocity_pattern(space);
    let dim = space.dim;
    let nl = space.nloc;
    scatter(space.mesh.n_cells(), &mut m, |c| {
        let dofs = cell_free_dofs(space, c);
        let nd = dofs.len();
        let mut vals = vec![0.0; nd * nd];
        let grads = cell_grads(space, tables, c);
        let meas = space.geom[c].measure;
        for (q, gq) in grads.iter().enumerate() {
            let w = tables.quad.weights[q] * meas * factorial(dim);
            for a_ in 0..nl {
                for d in 0..dim {
                    for b in 0..nl {
                        for e in 0..dim {
                            vals[(a_ * dim + d) * nd + b * dim + e] += w * gq[a_][d] * gq[b][e];
                        }
                    }
                }
            }
        }
        Local {
            rows: dofs.clone(),
            cols: dofs,
            vals,
        }
    });
    m
}

/// `int r div phi_i` over free velocity DOFs, `r` given per cell and barycentric point.
pub fn grad_div_load(space: &FunctionSpace, tables: &RefTables, r: impl Fn(usize, &[f64; 4]) -> f64 + Sync) -> Vec<f64> {
    let dim = space.dim;
    let nl = space.nloc;
    let mut out = vec![0.0; space.n_free()];
    scatter_vec(space.mesh.n_cells(), &mut out, |c| {
        let dofs = cell_free_dofs(space, c);
        let mut vals = vec![0.0; dofs.len()];
        let grads = cell_grads(space, tables, c);
        let meas = space.geom[c].measure;
        for (q, gq) in grads.iter().enumerate() {
            let w = tables.quad.weights[q] * meas * factorial(dim) * r(c, &tables.lam[q]);
            for a_ in 0..nl {
                for d in 0..dim {
                    vals[a_ * dim + d] += w * gq[a_][d];
                }
            }
        }
        (dofs, vals)
    });
    out
}

pub(crate) fn factorial(d: usize) -> f64 {
    (1..=d).product::<usize>() as f64
}

/// Velocity and gradient of a full-DOF field at one quadrature point.
#[inline]
pub(crate) fn eval_at(
    dim: usize,
    nodes: &[usize],
    w: &[f64],
    n: &[f64; MAX_P2],
    g: &[[f64; 3]; MAX_P2],
) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut u = [0.0; 3];
    let mut gu = [[0.0; 3]; 3];
    for (a, &node) in nodes.iter().enumerate() {
        for c in 0..dim {
            let wc = w[node * dim + c];
            if wc == 0.0 {
                continue;
            }
            u[c] += wc * n[a];
            for j in 0..dim {
                gu[c][j] += wc * g[a][j];
            }
        }
    }
    (u, gu)
}

/// Picard convection matrix `C(w)[(a,d),(b,c)] = int E(w)_{dc} N_b N_a` with
/// `E(w) = grad w - grad w^T`. Skew-symmetric entrywise.
pub fn convection_matrix(space: &FunctionSpace, tables: &RefTables, w_full: &[f64]) -> Csr {
    let mut m = velocity_pattern(space);
    let dim = space.dim;
    let nl = space.nloc;
    scatter(space.mesh.n_cells(), &mut m, |c| {
        let dofs = cell_free_dofs(space, c);
        let nd = dofs.len();
        let nodes = space.cell_nodes(c);
        let mut vals = vec![0.0; nd * nd];
        let grads = cell_grads(space, tables, c);
        let meas = space.geom[c].measure;
        for (q, gq) in grads.iter().enumerate() {
            let wq = tables.quad.weights[q] * meas * factorial(dim);
            let nq = &tables.n[q];
            let (_, gw) = eval_at(dim, nodes, w_full, nq, gq);
            let mut e = [[0.0; 3]; 3];
            for d in 0..dim {
                for cc in 0..dim {
                    e[d][cc] = gw[d][cc] - gw[cc][d];
                }
            }
            for a_ in 0..nl {
                for b in 0..nl {
                    let s = wq * nq[a_] * nq[b];
                    for d in 0..dim {
                        for cc in 0..dim {
                            if d != cc {
                                vals[(a_ * dim + d) * nd + b * dim + cc] += e[d][cc] * s;
                            }
                        }
                    }
                }
            }
        }
        Local {
            rows: dofs.clone(),
            cols: dofs,
            vals,
        }
    });
    m
}

/// Derivative of `v -> E(v) w` at fixed `w`:
/// `D(w)[(a,d),(b,c)] = int [delta_{dc} (w . grad N_b) - w_c d_d N_b] N_a`.
/// The Newton Jacobian of `E(u) u` is `C(u) + D(u)`.
pub fn newton_matrix(space: &FunctionSpace, tables: &RefTables, w_full: &[f64]) -> Csr {
    let mut m = velocity_pattern(space);
    let dim = space.dim;
    let nl = space.nloc;
    scatter(space.mesh.n_cells(), &mut m, |c| {
        let dofs = cell_free_dofs(space, c);
        let nd = dofs.len();
        let nodes = space.cell_nodes(c);
        let mut vals = vec![0.0; nd * nd];
        let grads = cell_grads(space, tables, c);
        let meas = space.geom[c].measure;
        for (q, gq) in grads.iter().enumerate() {
            let wq = tables.quad.weights[q] * meas * factorial(dim);
            let nq = &tables.n[q];
            let (w, _) = eval_at(dim, nodes, w_full, nq, gq);
            for a_ in 0..nl {
                let na = wq * nq[a_];
                for b in 0..nl {
                    let adv: f64 = (0..dim).map(|j| w[j] * gq[b][j]).sum();
                    for d in 0..dim {
                        for cc in 0..dim {
                            let mut v = -w[cc] * gq[b][d];
                            if d == cc {
                                v += adv;
                            }
                            vals[(a_ * dim + d) * nd + b * dim + cc] += v * na;
                        }
                    }
                }
            }
        }
        Local {
            rows: dofs.clone(),
            cols: dofs,
            vals,
        }
    });
    m
}

/// `int f . phi` over all DOFs (constraints not applied).
pub fn body_load_full(space: &FunctionSpace, tables: &RefTables, f: &Forcing) -> Vec<f64> {
    let dim = space.dim;
    let mut out = vec![0.0; space.n_dofs()];
    if f.is_zero() {
        return out;
    }
    let mesh = &space.mesh;
    scatter_vec(mesh.n_cells(), &mut out, |c| {
        let nodes = space.cell_nodes(c);
        let verts = mesh.cell(c);
        let pts = mesh.cell_points(c);
        let meas = space.geom[c].measure;
        let mut idx = Vec::with_capacity(nodes.len() * dim);
        for &n in nodes {
            for d in 0..dim {
                idx.push(n * dim + d);
            }
        }
        let mut vals = vec![0.0; idx.len()];
        for q in 0..tables.quad.len() {
            let lam = &tables.lam[q];
            let x = point_of(dim, &pts, lam);
            let fx = f.eval(x, verts, lam);
            let w = tables.quad.weights[q] * meas * factorial(dim);
            for a in 0..nodes.len() {
                for d in 0..dim {
                    vals[a * dim + d] += w * fx[d] * tables.n[q][a];
                }
            }
        }
        (idx, vals)
    });
    out
}

/// Integrals `int_facet N_a` of facet-local P2 basis, weighted by `weight(tag)`,
/// added on the axial component of every facet node.
pub fn axial_facet_load_full(space: &FunctionSpace, weight: impl Fn(FacetTag) -> f64) -> Vec<f64> {
    let dim = space.dim;
    let mesh = &space.mesh;
    let fdim = dim - 1;
    let tables = RefTables::new(fdim, 2);
    let mut out = vec![0.0; space.n_dofs()];
    let ax = dim - 1;
    for f in 0..mesh.n_facets() {
        let w = weight(mesh.facet_tags[f]);
        if w == 0.0 {
            continue;
        }
        let meas = mesh.facet_measure(f);
        let nodes = space.facet_nodes(f);
        for q in 0..tables.quad.len() {
            let qw = tables.quad.weights[q] * factorial(fdim) * meas * w;
            for (a, &n) in nodes.iter().enumerate() {
                out[n * dim + ax] += qw * tables.n[q][a];
            }
        }
    }
    debug_assert_eq!(n_p2(fdim), space.nfloc);
    out
}

/// The boundary load `p+ int_O phi.k - p- int_I phi.k` over all DOFs.
pub fn pressure_drop_load_full(space: &FunctionSpace, p_minus: f64, p_plus: f64) -> Vec<f64> {
    axial_facet_load_full(space, |t| match t {
        FacetTag::Outlet => p_plus,
        FacetTag::Inlet => -p_minus,
        _ => 0.0,
    })
}

/// Scalar P2 stiffness over all nodes.
pub fn scalar_stiffness(space: &FunctionSpace, tables: &RefTables) -> Csr {
    let mut k = scalar_pattern(space);
    let dim = space.dim;
    scatter(space.mesh.n_cells(), &mut k, |c| {
        let nodes = space.cell_nodes(c).to_vec();
        let nl = nodes.len();
        let mut vals = vec![0.0; nl * nl];
        let grads = cell_grads(space, tables, c);
        let meas = space.geom[c].measure;
        for (q, gq) in grads.iter().enumerate() {
            let w = tables.quad.weights[q] * meas * factorial(dim);
            for a in 0..nl {
                for b in 0..nl {
                    vals[a * nl + b] += w * (0..dim).map(|d| gq[a][d] * gq[b][d]).sum::<f64>();
                }
            }
        }
        Local {
            rows: nodes.clone(),
            cols: nodes,
            vals,
        }
    });
    k
}

/// Scalar P2 volume mass over all nodes.
pub fn scalar_mass(space: &FunctionSpace, tables: &RefTables) -> Csr {
    let mut m = scalar_pattern(space);
    let dim = space.dim;
    scatter(space.mesh.n_cells(), &mut m, |c| {
        let nodes = space.cell_nodes(c).to_vec();
        let nl = nodes.len();
        let mut vals = vec![0.0; nl * nl];
        let meas = space.geom[c].measure;
        for q in 0..tables.quad.len() {
            let w = tables.quad.weights[q] * meas * factorial(dim);
            let n = &tables.n[q];
            for a in 0..nl {
                for b in 0..nl {
                    vals[a * nl + b] += w * n[a] * n[b];
                }
            }
        }
        Local {
            rows: nodes.clone(),
            cols: nodes,
            vals,
        }
    });
    m
}

/// Cell facets lying in the plane `z = 0`, seen from cells of the PLUS region
/// (or any region when the mesh has no PLUS cells): `(cell, local facet vertex slots)`.
pub fn section_facets(space: &FunctionSpace) -> Vec<(usize, Vec<usize>)> {
    let mesh = &space.mesh;
    let dim = mesh.dim;
    let tol = mesh.tol();
    let has_plus = mesh.regions.contains(&crate::mesh::Region::Plus);
    let mut out = Vec::new();
    for c in 0..mesh.n_cells() {
        if has_plus && mesh.regions[c] != crate::mesh::Region::Plus {
            continue;
        }
        let cell = mesh.cell(c);
        let on: Vec<usize> = (0..=dim).filter(|&i| mesh.axial(cell[i]).abs() <= tol).collect();
        if on.len() == dim {
            out.push((c, on));
        }
    }
    out
}

/// Mass matrix on the section `z = 0` over all scalar P2 nodes.
pub fn section_mass(space: &FunctionSpace) -> Csr {
    let mesh = &space.mesh;
    let dim = mesh.dim;
    let fdim = dim - 1;
    let ft = RefTables::new(fdim, 4);
    let mut m = scalar_pattern(space);
    for (c, slots) in section_facets(space) {
        let pts = mesh.cell_points(c);
        let fp: Vec<[f64; 3]> = slots.iter().map(|&s| pts[s]).collect();
        let meas = facet_measure(dim, &fp);
        let nodes = space.cell_nodes(c);
        for q in 0..ft.quad.len() {
            let fl = &ft.lam[q];
            let mut lam = [0.0; 4];
            for (k, &s) in slots.iter().enumerate() {
                lam[s] = fl[k];
            }
            let n = p2_values(dim, &lam);
            let w = ft.quad.weights[q] * factorial(fdim) * meas;
            for a in 0..space.nloc {
                if n[a] == 0.0 {
                    continue;
                }
                for b in 0..space.nloc {
                    if n[b] != 0.0 {
                        m.add(nodes[a], nodes[b], w * n[a] * n[b]);
                    }
                }
            }
        }
    }
    m
}

pub(crate) fn facet_measure(dim: usize, p: &[[f64; 3]]) -> f64 {
    use crate::mesh::{cross, norm, sub};
    if dim == 2 {
        norm(sub(p[1], p[0]))
    } else {
        0.5 * norm(cross(sub(p[1], p[0]), sub(p[2], p[0])))
    }
}

/// Lumped P1 mass `int psi_k`.
pub fn pressure_mass_lumped(space: &FunctionSpace) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let share = space.geom[c].measure / (mesh.dim + 1) as f64;
        for &v in mesh.cell(c) {
            out[v] += share;
        }
    }
    out
}

/// Assembled linear part of the discrete problem.
#[derive(Debug)]
pub struct DiscreteSystem {
    pub space: Arc<FunctionSpace>,
    pub tables: RefTables,
    pub a: Csr,
    pub b: Csr,
    pub b_drop: Vec<f64>,
    pub b_f: Vec<f64>,
    pub p_minus: f64,
    pub p_plus: f64,
    pub forcing: Forcing,
    pub pressure_mass: Vec<f64>,
}

impl DiscreteSystem {
    /// `b_f - b_drop` over free DOFs.
    pub fn rhs(&self) -> Vec<f64> {
        self.b_f.iter().zip(&self.b_drop).map(|(f, d)| f - d).collect()
    }

    pub fn convection(&self, w_full: &[f64]) -> Csr {
        convection_matrix(&self.space, &self.tables, w_full)
    }

    pub fn newton(&self, w_full: &[f64]) -> Csr {
        newton_matrix(&self.space, &self.tables, w_full)
    }
}

pub const DEFAULT_QUADRATURE_DEGREE: usize = 5;

/// Assembles viscous, divergence and load terms.
pub fn assemble(
    space: Arc<FunctionSpace>,
    p_minus: f64,
    p_plus: f64,
    forcing: &Forcing,
    quadrature_degree: usize,
) -> Result<DiscreteSystem> {
    if quadrature_degree < 4 {
        return Err(Error::Configuration(format!(
            "cell quadrature degree {quadrature_degree} below 4"
        )));
    }
    forcing.check(space.dim, space.n_pressure(), quadrature_degree)?;
    let tables = RefTables::new(space.dim, quadrature_degree);
    let a = viscous_matrix(&space, &tables);
    let b = divergence_matrix(&space, &tables);
    let b_drop = space.to_free(&pressure_drop_load_full(&space, p_minus, p_plus));
    let b_f = space.to_free(&body_load_full(&space, &tables, forcing));
    let pressure_mass = pressure_mass_lumped(&space);
    Ok(DiscreteSystem {
        space,
        tables,
        a,
        b,
        b_drop,
        b_f,
        p_minus,
        p_plus,
        forcing: forcing.clone(),
        pressure_mass,
    })
}
