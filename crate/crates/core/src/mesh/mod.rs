//! Boundary-tagged simplicial meshes of the perforated pipe and its halves.
//!
//! Vertices are stored as `[f64; 3]`; the axial coordinate is always the
//! last active one (`z = v[dim - 1]`), so planar meshes use `[x, z, 0]`.
//!
//! The sieve wall at `z = 0` has zero thickness. Vertices on it are duplicated
//! (one copy per side) except inside the closed holes, so sieve facets show up
//! twice as boundary facets while hole facets are ordinary interior facets.

mod generate;
mod io;
mod locate;

pub use generate::{mesh_half_domain, mesh_open_pipe, mesh_sieve_pipe, z_levels};
pub use io::{read_mesh, write_mesh, write_vtk, VtkField};
pub use locate::PointLocator;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LayoutDocument, PipeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FacetTag {
    Inlet,
    Outlet,
    Lateral,
    Sieve,
}

impl FacetTag {
    pub const ALL: [FacetTag; 4] = [FacetTag::Inlet, FacetTag::Outlet, FacetTag::Lateral, FacetTag::Sieve];

    pub fn as_str(self) -> &'static str {
        match self {
            FacetTag::Inlet => "INLET",
            FacetTag::Outlet => "OUTLET",
            FacetTag::Lateral => "LATERAL",
            FacetTag::Sieve => "SIEVE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        FacetTag::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Wall tags carry full no-slip.
    pub fn is_wall(self) -> bool {
        matches!(self, FacetTag::Lateral | FacetTag::Sieve)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Region {
    Minus,
    Plus,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Minus => "MINUS",
            Region::Plus => "PLUS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "MINUS" => Some(Region::Minus),
            "PLUS" => Some(Region::Plus),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    /// The perforated pipe `Omega_eps`.
    SievePipe,
    /// The pipe without any wall at `z = 0`.
    OpenPipe,
    /// `Omega_-` with the whole section as wall.
    HalfMinus,
    /// `Omega_+` with the whole section as wall.
    HalfPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshResolution {
    /// Target edge length away from the holes.
    pub h_far: f64,
    /// Target edge length at hole rims.
    pub h_hole: f64,
    /// Geometric growth factor of the size field.
    pub grading_rate: f64,
    /// Number of layers of thickness `h_hole` on each side of `z = 0` before
    /// the axial grading starts (3D only).
    pub extrusion_layers: usize,
    /// Minimum admissible radius ratio.
    pub quality_floor: f64,
}

impl Default for MeshResolution {
    fn default() -> Self {
        MeshResolution {
            h_far: 0.1,
            h_hole: 0.005,
            grading_rate: 1.3,
            extrusion_layers: 1,
            quality_floor: 0.05,
        }
    }
}

impl MeshResolution {
    /// Desk-scale defaults: the planar default, or a coarser one in 3D.
    pub fn default_for_dim(dim: usize) -> Self {
        if dim == 3 {
            MeshResolution {
                h_far: 0.2,
                h_hole: 0.05,
                ..Default::default()
            }
        } else {
            MeshResolution::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_hole > 0.0 && self.h_hole <= self.h_far) {
            return Err(Error::Parameter(format!(
                "need 0 < h_hole <= h_far (got h_hole = {}, h_far = {})",
                self.h_hole, self.h_far
            )));
        }
        if !(self.grading_rate > 1.0 && self.grading_rate <= 3.0) {
            return Err(Error::Parameter(format!(
                "grading rate must lie in (1, 3] (got {})",
                self.grading_rate
            )));
        }
        if !(self.quality_floor >= 0.0 && self.quality_floor < 1.0) {
            return Err(Error::Parameter(format!(
                "quality floor must lie in [0, 1) (got {})",
                self.quality_floor
            )));
        }
        Ok(())
    }

    /// Halves both target sizes.
    pub fn refined(&self) -> Self {
        MeshResolution {
            h_far: 0.5 * self.h_far,
            h_hole: 0.5 * self.h_hole,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshProvenance {
    pub kind: MeshKind,
    pub pipe: PipeParams,
    pub layout: Option<LayoutDocument>,
    pub resolution: MeshResolution,
    /// Number of uniform refinements applied after generation.
    #[serde(default)]
    pub refinements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SieveMesh {
    pub dim: usize,
    pub vertices: Vec<[f64; 3]>,
    /// Flat connectivity, `dim + 1` vertices per cell, positively oriented.
    pub cells: Vec<usize>,
    pub regions: Vec<Region>,
    /// Flat connectivity, `dim` vertices per facet, oriented with outward normal.
    pub facets: Vec<usize>,
    pub facet_tags: Vec<FacetTag>,
    pub provenance: MeshProvenance,
}

/// Sorted vertex key of a facet.
pub(crate) fn facet_key(vs: &[usize]) -> [usize; 3] {
    let mut k = [usize::MAX; 3];
    k[..vs.len()].copy_from_slice(vs);
    k[..vs.len()].sort_unstable();
    k
}

/// Local facets of a simplex, each listed as the facet vertices followed by the
/// opposite vertex.
pub(crate) fn local_facets(dim: usize) -> &'static [&'static [usize]] {
    const TRI: [&[usize]; 3] = [&[1, 2, 0], &[2, 0, 1], &[0, 1, 2]];
    const TET: [&[usize]; 4] = [&[1, 2, 3, 0], &[0, 3, 2, 1], &[0, 1, 3, 2], &[0, 2, 1, 3]];
    if dim == 2 {
        &TRI
    } else {
        &TET
    }
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Signed measure of a simplex given by its vertices.
pub(crate) fn signed_measure(dim: usize, p: &[[f64; 3]]) -> f64 {
    if dim == 2 {
        let a = sub(p[1], p[0]);
        let b = sub(p[2], p[0]);
        0.5 * (a[0] * b[1] - a[1] * b[0])
    } else {
        let a = sub(p[1], p[0]);
        let b = sub(p[2], p[0]);
        let c = sub(p[3], p[0]);
        dot(a, cross(b, c)) / 6.0
    }
}

/// Radius ratio normalised to 1 for the regular simplex.
pub(crate) fn radius_ratio(dim: usize, p: &[[f64; 3]]) -> f64 {
    if dim == 2 {
        let a = norm(sub(p[1], p[2]));
        let b = norm(sub(p[0], p[2]));
        let c = norm(sub(p[0], p[1]));
        let area = signed_measure(2, p).abs();
        if area == 0.0 {
            return 0.0;
        }
        let r_in = 2.0 * area / (a + b + c);
        let r_circ = a * b * c / (4.0 * area);
        2.0 * r_in / r_circ
    } else {
        let vol = signed_measure(3, p).abs();
        if vol == 0.0 {
            return 0.0;
        }
        let faces: f64 = local_facets(3)
            .iter()
            .map(|f| 0.5 * norm(cross(sub(p[f[1]], p[f[0]]), sub(p[f[2]], p[f[0]]))))
            .sum();
        let r_in = 3.0 * vol / faces;
        // circumradius from |a|^2 (b x c) + |b|^2 (c x a) + |c|^2 (a x b) over 12 V
        let a = sub(p[1], p[0]);
        let b = sub(p[2], p[0]);
        let c = sub(p[3], p[0]);
        let (na, nb, nc) = (dot(a, a), dot(b, b), dot(c, c));
        let bc = cross(b, c);
        let ca = cross(c, a);
        let ab = cross(a, b);
        let num = [
            na * bc[0] + nb * ca[0] + nc * ab[0],
            na * bc[1] + nb * ca[1] + nc * ab[1],
            na * bc[2] + nb * ca[2] + nc * ab[2],
        ];
        let r_circ = norm(num) / (12.0 * vol);
        3.0 * r_in / r_circ
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub cell_count: usize,
    pub vertex_count: usize,
    pub min_radius_ratio: f64,
    pub mean_radius_ratio: f64,
    pub worst_cell: usize,
    /// Facet measure per tag, in the order of `FacetTag::ALL`.
    pub tag_measures: Vec<(FacetTag, f64)>,
    /// One-sided measure of the sieve wall (each wall facet appears on both sides).
    pub sieve_coverage: f64,
    pub volume: f64,
}

impl QualityReport {
    pub fn tag_measure(&self, tag: FacetTag) -> f64 {
        self.tag_measures
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, m)| *m)
            .unwrap_or(0.0)
    }
}

impl SieveMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.regions.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facet_tags.len()
    }

    pub fn cell(&self, i: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[i * k..(i + 1) * k]
    }

    pub fn facet(&self, i: usize) -> &[usize] {
        let k = self.dim;
        &self.facets[i * k..(i + 1) * k]
    }

    pub fn axial(&self, v: usize) -> f64 {
        self.vertices[v][self.dim - 1]
    }

    /// Distance of a vertex from the pipe axis.
    pub fn radial(&self, v: usize) -> f64 {
        let p = self.vertices[v];
        if self.dim == 2 {
            p[0].abs()
        } else {
            (p[0] * p[0] + p[1] * p[1]).sqrt()
        }
    }

    pub fn cell_points(&self, i: usize) -> Vec<[f64; 3]> {
        self.cell(i).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_measure(&self, i: usize) -> f64 {
        signed_measure(self.dim, &self.cell_points(i)).abs()
    }

    pub fn facet_measure(&self, i: usize) -> f64 {
        norm(self.facet_normal(i))
    }

    /// Outward normal scaled by the facet measure.
    pub fn facet_normal(&self, i: usize) -> [f64; 3] {
        let f = self.facet(i);
        let p: Vec<[f64; 3]> = f.iter().map(|&v| self.vertices[v]).collect();
        if self.dim == 2 {
            let t = sub(p[1], p[0]);
            [t[1], -t[0], 0.0]
        } else {
            let n = cross(sub(p[1], p[0]), sub(p[2], p[0]));
            [0.5 * n[0], 0.5 * n[1], 0.5 * n[2]]
        }
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_cells()).map(|i| self.cell_measure(i)).sum()
    }

    pub fn region_volume(&self, r: Region) -> f64 {
        (0..self.n_cells())
            .filter(|&i| self.regions[i] == r)
            .map(|i| self.cell_measure(i))
            .sum()
    }

    pub fn tag_measure(&self, tag: FacetTag) -> f64 {
        (0..self.n_facets())
            .filter(|&i| self.facet_tags[i] == tag)
            .map(|i| self.facet_measure(i))
            .sum()
    }

    pub fn has_tag(&self, tag: FacetTag) -> bool {
        self.facet_tags.contains(&tag)
    }

    /// Measure of the sieve wall counted once (from the MINUS side, or the only side present).
    pub fn sieve_coverage(&self) -> f64 {
        // Outward normal of a MINUS-side wall facet points to +z.
        let ax = self.dim - 1;
        let up: f64 = (0..self.n_facets())
            .filter(|&i| self.facet_tags[i] == FacetTag::Sieve)
            .map(|i| self.facet_normal(i)[ax].max(0.0))
            .sum();
        let down: f64 = (0..self.n_facets())
            .filter(|&i| self.facet_tags[i] == FacetTag::Sieve)
            .map(|i| (-self.facet_normal(i)[ax]).max(0.0))
            .sum();
        up.max(down)
    }

    /// Sum of outward facet normals times measure; zero for a closed boundary.
    pub fn boundary_normal_sum(&self) -> [f64; 3] {
        let mut s = [0.0; 3];
        for i in 0..self.n_facets() {
            let n = self.facet_normal(i);
            for d in 0..3 {
                s[d] += n[d];
            }
        }
        s
    }

    pub fn pipe(&self) -> &PipeParams {
        &self.provenance.pipe
    }

    /// Geometric tolerance used for snapping tests.
    pub fn tol(&self) -> f64 {
        1e-9 * self.provenance.pipe.half_length.max(self.provenance.pipe.radius)
    }

    /// Cells adjacent through interior facets, grouped into connected components.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n_cells();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut first: HashMap<[usize; 3], usize> = HashMap::new();
        for c in 0..n {
            let cell = self.cell(c);
            for lf in local_facets(self.dim) {
                let vs: Vec<usize> = lf[..self.dim].iter().map(|&l| cell[l]).collect();
                let key = facet_key(&vs);
                if let Some(&other) = first.get(&key) {
                    let (a, b) = (find(&mut parent, c), find(&mut parent, other));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                } else {
                    first.insert(key, c);
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut out = vec![0; n];
        for c in 0..n {
            let r = find(&mut parent, c);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            out[c] = label[r];
        }
        out
    }
}

/// Computes a quality report; fails on an empty mesh.
pub fn mesh_quality(mesh: &SieveMesh) -> Result<QualityReport> {
    if mesh.n_cells() == 0 {
        return Err(Error::Meshing {
            message: "mesh has no cells".into(),
            worst_cell: 0,
            worst_quality: 0.0,
        });
    }
    let mut min_q = f64::INFINITY;
    let mut worst = 0;
    let mut sum_q = 0.0;
    for i in 0..mesh.n_cells() {
        let q = radius_ratio(mesh.dim, &mesh.cell_points(i));
        sum_q += q;
        if q < min_q {
            min_q = q;
            worst = i;
        }
    }
    Ok(QualityReport {
        cell_count: mesh.n_cells(),
        vertex_count: mesh.n_vertices(),
        min_radius_ratio: min_q,
        mean_radius_ratio: sum_q / mesh.n_cells() as f64,
        worst_cell: worst,
        tag_measures: FacetTag::ALL.iter().map(|&t| (t, mesh.tag_measure(t))).collect(),
        sieve_coverage: mesh.sieve_coverage(),
        volume: mesh.volume(),
    })
}

/// Collects boundary facets (those owned by one cell), oriented outward, in
/// order of first appearance.
pub(crate) fn boundary_facets(dim: usize, vertices: &[[f64; 3]], cells: &[usize]) -> Vec<Vec<usize>> {
    let k = dim + 1;
    let n = cells.len() / k;
    let mut count: HashMap<[usize; 3], u32> = HashMap::with_capacity(n * k);
    for c in 0..n {
        let cell = &cells[c * k..(c + 1) * k];
        for lf in local_facets(dim) {
            let vs: Vec<usize> = lf[..dim].iter().map(|&l| cell[l]).collect();
            *count.entry(facet_key(&vs)).or_insert(0) += 1;
        }
    }
    let mut out = Vec::new();
    for c in 0..n {
        let cell = &cells[c * k..(c + 1) * k];
        for lf in local_facets(dim) {
            let mut vs: Vec<usize> = lf[..dim].iter().map(|&l| cell[l]).collect();
            if count[&facet_key(&vs)] != 1 {
                continue;
            }
            let opp = vertices[cell[lf[dim]]];
            let p: Vec<[f64; 3]> = vs.iter().map(|&v| vertices[v]).collect();
            let normal = if dim == 2 {
                let t = sub(p[1], p[0]);
                [t[1], -t[0], 0.0]
            } else {
                cross(sub(p[1], p[0]), sub(p[2], p[0]))
            };
            if dot(normal, sub(opp, p[0])) > 0.0 {
                vs.swap(0, 1);
            }
            out.push(vs);
        }
    }
    out
}

/// Tags boundary facets by position.
pub(crate) fn classify_facets(
    dim: usize,
    vertices: &[[f64; 3]],
    facets: &[Vec<usize>],
    pipe: &PipeParams,
) -> Result<Vec<FacetTag>> {
    let tol = 1e-9 * pipe.half_length.max(pipe.radius);
    let rtol = 1e-7 * pipe.radius;
    let ax = dim - 1;
    let radial = |p: [f64; 3]| if dim == 2 { p[0].abs() } else { (p[0] * p[0] + p[1] * p[1]).sqrt() };
    facets
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let all = |pred: &dyn Fn([f64; 3]) -> bool| f.iter().all(|&v| pred(vertices[v]));
            if all(&|p| (p[ax] + pipe.half_length).abs() <= tol) {
                Ok(FacetTag::Inlet)
            } else if all(&|p| (p[ax] - pipe.half_length).abs() <= tol) {
                Ok(FacetTag::Outlet)
            } else if all(&|p| p[ax].abs() <= tol) {
                Ok(FacetTag::Sieve)
            } else if all(&|p| (radial(p) - pipe.radius).abs() <= rtol) {
                Ok(FacetTag::Lateral)
            } else {
                Err(Error::Meshing {
                    message: format!("boundary facet {i} lies on no pipe boundary part"),
                    worst_cell: 0,
                    worst_quality: 0.0,
                })
            }
        })
        .collect()
}

impl SieveMesh {
    /// Builds a mesh from cells, fixing orientation and extracting tagged facets.
    pub(crate) fn from_cells(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        mut cells: Vec<usize>,
        regions: Vec<Region>,
        provenance: MeshProvenance,
    ) -> Result<Self> {
        let k = dim + 1;
        for c in 0..regions.len() {
            let p: Vec<[f64; 3]> = cells[c * k..(c + 1) * k].iter().map(|&v| vertices[v]).collect();
            if signed_measure(dim, &p) < 0.0 {
                cells.swap(c * k + dim - 1, c * k + dim);
            }
        }
        let bf = boundary_facets(dim, &vertices, &cells);
        let tags = classify_facets(dim, &vertices, &bf, &provenance.pipe)?;
        Ok(SieveMesh {
            dim,
            vertices,
            cells,
            regions,
            facets: bf.into_iter().flatten().collect(),
            facet_tags: tags,
            provenance,
        })
    }

    pub(crate) fn check_quality(&self) -> Result<()> {
        let q = mesh_quality(self)?;
        if q.min_radius_ratio < self.provenance.resolution.quality_floor {
            return Err(Error::Meshing {
                message: format!(
                    "radius ratio below floor {}",
                    self.provenance.resolution.quality_floor
                ),
                worst_cell: q.worst_cell,
                worst_quality: q.min_radius_ratio,
            });
        }
        Ok(())
    }
}

/// Splits every planar cell whose vertices all lie on the boundary at its centroid.
/// A no-slip P2 field has almost no freedom in such a cell (domain corners),
/// which spoils the pointwise divergence.
pub(crate) fn split_locked_cells(mesh: SieveMesh) -> Result<SieveMesh> {
    if mesh.dim != 2 {
        return Ok(mesh);
    }
    let k = mesh.dim + 1;
    let mut on_boundary = vec![false; mesh.n_vertices()];
    for &v in &mesh.facets {
        on_boundary[v] = true;
    }
    let locked: Vec<usize> = (0..mesh.n_cells())
        .filter(|&c| mesh.cell(c).iter().all(|&v| on_boundary[v]))
        .collect();
    if locked.is_empty() {
        return Ok(mesh);
    }
    let mut vertices = mesh.vertices.clone();
    let mut cells = Vec::with_capacity(mesh.cells.len() + locked.len() * k * mesh.dim);
    let mut regions = Vec::with_capacity(mesh.n_cells() + locked.len() * mesh.dim);
    let mut next = locked.iter().peekable();
    for c in 0..mesh.n_cells() {
        let t = mesh.cell(c);
        if next.peek() == Some(&&c) {
            next.next();
            let mut g = [0.0; 3];
            for &v in t {
                for d in 0..3 {
                    g[d] += vertices[v][d] / k as f64;
                }
            }
            vertices.push(g);
            let m = vertices.len() - 1;
            for i in 0..k {
                let mut sub = t.to_vec();
                sub[i] = m;
                cells.extend_from_slice(&sub);
                regions.push(mesh.regions[c]);
            }
        } else {
            cells.extend_from_slice(t);
            regions.push(mesh.regions[c]);
        }
    }
    SieveMesh::from_cells(mesh.dim, vertices, cells, regions, mesh.provenance)
}

/// Red refinement of a planar mesh: every triangle is split into four.
pub fn refine_uniform(mesh: &SieveMesh) -> Result<SieveMesh> {
    if mesh.dim != 2 {
        return Err(Error::Parameter("uniform refinement is implemented for dim 2 only".into()));
    }
    let mut vertices = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
        let key = (a.min(b), a.max(b));
        *mid.entry(key).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]);
            vertices.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(mesh.cells.len() * 4);
    let mut regions = Vec::with_capacity(mesh.n_cells() * 4);
    for c in 0..mesh.n_cells() {
        let t = mesh.cell(c);
        let (a, b, d) = (t[0], t[1], t[2]);
        let ab = midpoint(a, b, &mut vertices);
        let bd = midpoint(b, d, &mut vertices);
        let da = midpoint(d, a, &mut vertices);
        cells.extend_from_slice(&[a, ab, da, ab, b, bd, da, bd, d, ab, bd, da]);
        regions.extend_from_slice(&[mesh.regions[c]; 4]);
    }
    let mut prov = mesh.provenance.clone();
    prov.refinements += 1;
    split_locked_cells(SieveMesh::from_cells(2, vertices, cells, regions, prov)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_ratio_of_regular_simplices() {
        let s3 = 3f64.sqrt();
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.5 * s3, 0.0]];
        assert!((radius_ratio(2, &tri) - 1.0).abs() < 1e-12);
        let tet = [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        assert!((radius_ratio(3, &tet) - 1.0).abs() < 1e-12);
        let flat = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert_eq!(radius_ratio(2, &flat), 0.0);
    }

    #[test]
    fn facet_keys_ignore_order() {
        assert_eq!(facet_key(&[3, 1, 2]), facet_key(&[2, 3, 1]));
        assert_eq!(facet_key(&[5, 4]), [4, 5, usize::MAX]);
    }

    #[test]
    fn resolution_validation() {
        assert!(MeshResolution::default().validate().is_ok());
        let bad = MeshResolution {
            grading_rate: 3.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MeshResolution {
            h_hole: 0.5,
            h_far: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
