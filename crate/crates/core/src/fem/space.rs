use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::element::{edges, n_p2, p2_grads, p2_values, CellGeom};
use crate::error::{Error, Result};
use crate::mesh::{FacetTag, SieveMesh};

/// Which boundary conditions the velocity space carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BcProfile {
    /// Problem on `Omega_eps`: no-slip on walls, `u x nu = 0` on inlet and outlet.
    EpsLevel,
    /// Limit problem on `Omega_-`: the whole section is a wall.
    HalfMinus,
    /// Limit problem on `Omega_+`.
    HalfPlus,
    /// Every boundary node fully constrained (`H^1_0`).
    NoSlip,
}

impl BcProfile {
    pub fn as_str(self) -> &'static str {
        match self {
            BcProfile::EpsLevel => "EPS_LEVEL",
            BcProfile::HalfMinus => "HALF_MINUS",
            BcProfile::HalfPlus => "HALF_PLUS",
            BcProfile::NoSlip => "NO_SLIP",
        }
    }
}

/// Continuous P2 velocity / P1 Bernoulli pressure on a mesh, with the
/// velocity constraint set. Velocity DOF `node * dim + comp`; pressure DOFs
/// are the mesh vertices. Nodes `0..n_vertices` are the vertices, the rest
/// are edge midpoints.
#[derive(Debug)]
pub struct FunctionSpace {
    pub mesh: Arc<SieveMesh>,
    pub profile: BcProfile,
    pub dim: usize,
    pub n_nodes: usize,
    pub nloc: usize,
    pub cell_nodes: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub node_coords: Vec<[f64; 3]>,
    pub geom: Vec<CellGeom>,
    /// P2 nodes of each boundary facet in facet-local P2 order.
    pub facet_nodes: Vec<usize>,
    pub nfloc: usize,
    pub node_nbrs: Vec<Vec<usize>>,
    pub fixed: Vec<bool>,
    pub free_index: Vec<usize>,
    pub free_dofs: Vec<usize>,
}

impl FunctionSpace {
    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.dim
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.n_dofs() - self.n_free()
    }

    pub fn n_pressure(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn cell_nodes(&self, c: usize) -> &[usize] {
        &self.cell_nodes[c * self.nloc..(c + 1) * self.nloc]
    }

    pub fn facet_nodes(&self, f: usize) -> &[usize] {
        &self.facet_nodes[f * self.nfloc..(f + 1) * self.nfloc]
    }

    pub fn to_full(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_dofs()];
        for (i, &g) in self.free_dofs.iter().enumerate() {
            full[g] = free[i];
        }
        full
    }

    pub fn to_free(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&g| full[g]).collect()
    }

    /// Nodes lying on facets with any of the given tags.
    pub fn nodes_on_tags(&self, tags: &[FacetTag]) -> Vec<bool> {
        let mut on = vec![false; self.n_nodes];
        for f in 0..self.mesh.n_facets() {
            if tags.contains(&self.mesh.facet_tags[f]) {
                for &n in self.facet_nodes(f) {
                    on[n] = true;
                }
            }
        }
        on
    }

    /// P2 interpolant of a vector field (all DOFs, constraints not applied).
    pub fn interpolate(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (n, &x) in self.node_coords.iter().enumerate() {
            let v = f(x);
            out[n * self.dim..(n + 1) * self.dim].copy_from_slice(&v[..self.dim]);
        }
        out
    }

    /// Velocity and gradient (`g[i][j] = d_j u_i`) of a full-DOF field at a point of cell `c`.
    pub fn velocity_at(&self, u: &[f64], c: usize, lam: &[f64; 4]) -> ([f64; 3], [[f64; 3]; 3]) {
        let n = p2_values(self.dim, lam);
        let g = p2_grads(self.dim, lam, &self.geom[c].grad_lam);
        super::assemble::eval_at(self.dim, self.cell_nodes(c), u, &n, &g)
    }

    /// P1 pressure value at a point of cell `c`.
    pub fn pressure_at(&self, phi: &[f64], c: usize, lam: &[f64; 4]) -> f64 {
        self.mesh.cell(c).iter().enumerate().map(|(i, &v)| lam[i] * phi[v]).sum()
    }

    /// Zeroes every constrained DOF.
    pub fn apply_constraints(&self, full: &mut [f64]) {
        for (g, v) in full.iter_mut().enumerate() {
            if self.fixed[g] {
                *v = 0.0;
            }
        }
    }
}

/// Builds the P2/P1 space with the constraint set of `profile`.
pub fn build_space(mesh: Arc<SieveMesh>, profile: BcProfile) -> Result<FunctionSpace> {
    let has = |t| mesh.has_tag(t);
    let ok = match profile {
        BcProfile::EpsLevel => has(FacetTag::Inlet) && has(FacetTag::Outlet),
        BcProfile::HalfMinus => has(FacetTag::Inlet) && !has(FacetTag::Outlet),
        BcProfile::HalfPlus => has(FacetTag::Outlet) && !has(FacetTag::Inlet),
        BcProfile::NoSlip => true,
    };
    if !ok {
        return Err(Error::Configuration(format!(
            "mesh tags do not match boundary profile {}",
            profile.as_str()
        )));
    }
    let dim = mesh.dim;
    let nv = mesh.n_vertices();
    let nloc = n_p2(dim);
    let nfloc = n_p2(dim - 1);
    let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_list: Vec<[usize; 2]> = Vec::new();
    let mut cell_nodes = Vec::with_capacity(mesh.n_cells() * nloc);
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        cell_nodes.extend_from_slice(cell);
        for e in edges(dim) {
            let (a, b) = (cell[e[0]], cell[e[1]]);
            let key = (a.min(b), a.max(b));
            let id = *edge_id.entry(key).or_insert_with(|| {
                edge_list.push([key.0, key.1]);
                edge_list.len() - 1
            });
            cell_nodes.push(nv + id);
        }
    }
    let n_nodes = nv + edge_list.len();
    let mut node_coords = mesh.vertices.clone();
    for e in &edge_list {
        let (p, q) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
        node_coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]);
    }
    let mut facet_nodes = Vec::with_capacity(mesh.n_facets() * nfloc);
    for f in 0..mesh.n_facets() {
        let fv = mesh.facet(f);
        facet_nodes.extend_from_slice(fv);
        for e in edges(dim - 1) {
            let (a, b) = (fv[e[0]], fv[e[1]]);
            let id = edge_id
                .get(&(a.min(b), a.max(b)))
                .ok_or_else(|| Error::Configuration("boundary facet edge missing from cells".into()))?;
            facet_nodes.push(nv + id);
        }
    }
    let mut node_nbrs: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for c in 0..mesh.n_cells() {
        let ns = &cell_nodes[c * nloc..(c + 1) * nloc];
        for &a in ns {
            node_nbrs[a].extend_from_slice(ns);
        }
    }
    for l in node_nbrs.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let geom = (0..mesh.n_cells()).map(|c| CellGeom::of_cell(&mesh, c)).collect();

    let ax = dim - 1;
    let mut fixed = vec![false; n_nodes * dim];
    for f in 0..mesh.n_facets() {
        let tag = mesh.facet_tags[f];
        let full = profile == BcProfile::NoSlip || tag.is_wall();
        for &n in &facet_nodes[f * nfloc..(f + 1) * nfloc] {
            for c in 0..dim {
                if full || c != ax {
                    fixed[n * dim + c] = true;
                }
            }
        }
    }
    let mut free_index = vec![usize::MAX; n_nodes * dim];
    let mut free_dofs = Vec::new();
    for g in 0..n_nodes * dim {
        if !fixed[g] {
            free_index[g] = free_dofs.len();
            free_dofs.push(g);
        }
    }
    Ok(FunctionSpace {
        mesh,
        profile,
        dim,
        n_nodes,
        nloc,
        cell_nodes,
        edges: edge_list,
        node_coords,
        geom,
        facet_nodes,
        nfloc,
        node_nbrs,
        fixed,
        free_index,
        free_dofs,
    })
}
