use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::{MeshKind, MeshProvenance, MeshResolution, Region, SieveMesh};
use crate::error::{Error, Result};
use crate::geometry::{PerforationLayout, PipeParams};

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

/// A hole as seen in the section plane: center and radius (half-length in 2D).
#[derive(Debug, Clone, Copy)]
struct Hole {
    c: [f64; 2],
    rho: f64,
}

/// Triangulated section: the upper half-rectangle `[-R,R] x [0,h]` in 2D or
/// the disk of radius `R` in 3D.
struct Section {
    pts: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
}

const ANGLE_LIMIT_DEG: f64 = 28.0;
const MAX_SIZE_PASSES: usize = 60;

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Points from `a` (inclusive) to `b` (exclusive) spaced by the size field.
fn seed_segment(a: [f64; 2], b: [f64; 2], size: &dyn Fn([f64; 2]) -> f64) -> Vec<[f64; 2]> {
    let len = dist2(a, b);
    let mut ts = vec![0.0];
    let mut t = 0.0;
    loop {
        let s1 = size(lerp(a, b, t)) / len;
        let s2 = size(lerp(a, b, (t + s1).min(1.0))) / len;
        let step = s1.min(s2);
        t += step;
        if t >= 1.0 - 0.3 * step {
            break;
        }
        ts.push(t);
    }
    ts.iter().map(|&s| lerp(a, b, s / t)).collect()
}

fn insert(cdt: &mut Cdt, p: [f64; 2]) -> Result<spade::handles::FixedVertexHandle> {
    cdt.insert(Point2::new(p[0], p[1])).map_err(|e| Error::Meshing {
        message: format!("triangulation insertion failed at ({}, {}): {e:?}", p[0], p[1]),
        worst_cell: 0,
        worst_quality: 0.0,
    })
}

/// Delaunay refinement for angles followed by size-field passes that insert
/// centroids of oversized triangles, plus splitting of section edges that
/// would join two different holes.
fn refine(
    cdt: &mut Cdt,
    size: &dyn Fn([f64; 2]) -> f64,
    h_far: f64,
    bridge: &dyn Fn([f64; 2], [f64; 2]) -> bool,
) -> Result<()> {
    for _ in 0..MAX_SIZE_PASSES {
        let params = RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(ANGLE_LIMIT_DEG))
            .with_max_allowed_area(0.5 * h_far * h_far)
            .with_max_additional_vertices(4_000_000);
        let result = cdt.refine(params);
        if !result.refinement_complete {
            return Err(Error::Meshing {
                message: "Delaunay refinement exhausted its vertex budget".into(),
                worst_cell: 0,
                worst_quality: 0.0,
            });
        }
        let mut extra = Vec::new();
        for face in cdt.inner_faces() {
            let p = face.vertices().map(|v| {
                let q = v.position();
                [q.x, q.y]
            });
            let longest = dist2(p[0], p[1]).max(dist2(p[1], p[2])).max(dist2(p[2], p[0]));
            let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            if longest > 1.4 * size(c) {
                extra.push(c);
            }
        }
        for e in cdt.undirected_edges() {
            let [a, b] = e.vertices().map(|v| {
                let q = v.position();
                [q.x, q.y]
            });
            if bridge(a, b) {
                extra.push(lerp(a, b, 0.5));
            }
        }
        if extra.is_empty() {
            return Ok(());
        }
        for p in extra {
            insert(cdt, p)?;
        }
    }
    Err(Error::Meshing {
        message: "size-field refinement did not settle".into(),
        worst_cell: 0,
        worst_quality: 0.0,
    })
}

fn extract(cdt: &Cdt) -> Section {
    let pts = cdt
        .vertices()
        .map(|v| {
            let q = v.position();
            [q.x, q.y]
        })
        .collect();
    let tris = cdt
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.fix().index()))
        .collect();
    Section { pts, tris }
}

/// Size field `min(h_far, h_hole + (g - 1) d)` with `d` the distance to the
/// nearest hole rim.
fn size_field(holes: &[Hole], res: &MeshResolution, rim_dist: impl Fn(&Hole, [f64; 2]) -> f64) -> impl Fn([f64; 2]) -> f64 {
    let h_far = res.h_far;
    let h_hole = res.h_hole;
    let g = res.grading_rate;
    let dists: Vec<Hole> = holes.to_vec();
    move |p| {
        let d = dists.iter().map(|h| rim_dist(h, p)).fold(f64::INFINITY, f64::min);
        if d.is_finite() {
            (h_hole + (g - 1.0) * d).min(h_far)
        } else {
            h_far
        }
    }
}

fn section_2d(pipe: &PipeParams, holes: &[Hole], res: &MeshResolution) -> Result<Section> {
    let (r, h) = (pipe.radius, pipe.half_length);
    let size = size_field(holes, res, |hole, p| {
        let e1 = [hole.c[0] - hole.rho, 0.0];
        let e2 = [hole.c[0] + hole.rho, 0.0];
        dist2(p, e1).min(dist2(p, e2))
    });
    let mut breaks = vec![-r];
    let mut sorted = holes.to_vec();
    sorted.sort_by(|a, b| a.c[0].total_cmp(&b.c[0]));
    for hole in &sorted {
        breaks.push(hole.c[0] - hole.rho);
        breaks.push(hole.c[0] + hole.rho);
    }
    breaks.push(r);
    let mut seeds = Vec::new();
    for w in breaks.windows(2) {
        seeds.extend(seed_segment([w[0], 0.0], [w[1], 0.0], &size));
    }
    seeds.extend(seed_segment([r, 0.0], [r, h], &size));
    seeds.extend(seed_segment([r, h], [-r, h], &size));
    seeds.extend(seed_segment([-r, h], [-r, 0.0], &size));

    let mut cdt = Cdt::new();
    for p in seeds {
        insert(&mut cdt, p)?;
    }
    let tol = 1e-9 * r;
    let in_hole = |x: f64| sorted.iter().position(|hole| (x - hole.c[0]).abs() <= hole.rho + tol);
    let bridge = |a: [f64; 2], b: [f64; 2]| {
        if a[1].abs() > tol || b[1].abs() > tol {
            return false;
        }
        match (in_hole(a[0]), in_hole(b[0])) {
            (Some(i), Some(j)) => i != j,
            _ => false,
        }
    };
    refine(&mut cdt, &size, res.h_far, &bridge)?;
    let mut s = extract(&cdt);
    for p in &mut s.pts {
        if p[1].abs() <= tol {
            p[1] = 0.0;
        }
    }
    Ok(s)
}

fn section_3d(pipe: &PipeParams, holes: &[Hole], res: &MeshResolution) -> Result<Section> {
    let r = pipe.radius;
    let size = size_field(holes, res, |hole, p| (dist2(p, hole.c) - hole.rho).abs());

    let mut cdt = Cdt::new();
    let mut theta: f64 = 0.0;
    let mut n_circle = 0usize;
    let tau = 2.0 * std::f64::consts::PI;
    while theta < tau {
        theta += size([r * theta.cos(), r * theta.sin()]) / r;
        n_circle += 1;
    }
    let n_circle = n_circle.max(8);
    let angles: Vec<f64> = (0..n_circle).map(|k| k as f64 * tau / n_circle as f64).collect();
    for a in &angles {
        insert(&mut cdt, [r * a.cos(), r * a.sin()])?;
    }
    for hole in holes {
        let n = ((tau * hole.rho / res.h_hole).ceil() as usize).max(12);
        let mut ids = Vec::with_capacity(n);
        for k in 0..n {
            let a = k as f64 * tau / n as f64;
            ids.push(insert(&mut cdt, [hole.c[0] + hole.rho * a.cos(), hole.c[1] + hole.rho * a.sin()])?);
        }
        for k in 0..n {
            cdt.add_constraint(ids[k], ids[(k + 1) % n]);
        }
    }
    let tol = 1e-9 * r;
    let which = |p: [f64; 2]| holes.iter().position(|h| dist2(p, h.c) <= h.rho + tol);
    let bridge = |a: [f64; 2], b: [f64; 2]| match (which(a), which(b)) {
        (Some(i), Some(j)) => i != j || which(lerp(a, b, 0.5)).is_none(),
        _ => false,
    };
    refine(&mut cdt, &size, res.h_far, &bridge)?;

    let mut s = extract(&cdt);
    let hull: Vec<usize> = cdt.convex_hull().map(|e| e.from().fix().index()).collect();
    for i in hull {
        let p = s.pts[i];
        let rad = (p[0] * p[0] + p[1] * p[1]).sqrt();
        s.pts[i] = [p[0] * r / rad, p[1] * r / rad];
    }
    Ok(s)
}

/// Axial levels on `[0, h]`: `n_fine` layers of thickness `h_near`, then
/// geometric growth by `g` capped at `h_far`, rescaled to end exactly at `h`.
pub fn z_levels(h: f64, h_near: f64, g: f64, h_far: f64, n_fine: usize) -> Vec<f64> {
    let mut z = vec![0.0];
    let mut dz = h_near;
    let mut k = 0;
    loop {
        let next = z[z.len() - 1] + dz;
        if next >= h - 0.3 * dz {
            z.push(next);
            break;
        }
        z.push(next);
        k += 1;
        if k >= n_fine {
            dz = (dz * g).min(h_far);
        }
    }
    let last = z[z.len() - 1];
    z.iter().map(|v| v * h / last).collect()
}

fn holes_of(layout: &PerforationLayout) -> Vec<Hole> {
    layout
        .centers
        .iter()
        .zip(&layout.hole_radii)
        .map(|(&c, &rho)| Hole { c, rho })
        .collect()
}

fn provenance(kind: MeshKind, pipe: PipeParams, layout: Option<&PerforationLayout>, res: &MeshResolution) -> MeshProvenance {
    MeshProvenance {
        kind,
        pipe,
        layout: layout.map(|l| l.to_document()),
        resolution: *res,
        refinements: 0,
    }
}

/// Which vertices on `z = 0` are shared by both sides.
fn shared_on_section(kind: MeshKind, holes: &[Hole], dim: usize, tol: f64) -> impl Fn([f64; 2]) -> bool + '_ {
    move |p| match kind {
        MeshKind::OpenPipe => true,
        MeshKind::SievePipe => holes.iter().any(|h| {
            let d = if dim == 2 { (p[0] - h.c[0]).abs() } else { dist2(p, h.c) };
            d <= h.rho + tol
        }),
        _ => false,
    }
}

fn build_2d(pipe: PipeParams, kind: MeshKind, holes: &[Hole], res: &MeshResolution, prov: MeshProvenance) -> Result<SieveMesh> {
    let sec = section_2d(&pipe, holes, res)?;
    let tol = 1e-9 * pipe.radius;
    let shared = shared_on_section(kind, holes, 2, tol);
    let n = sec.pts.len();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut up = vec![usize::MAX; n];
    let mut down = vec![usize::MAX; n];
    let want_up = kind != MeshKind::HalfMinus;
    let want_down = kind != MeshKind::HalfPlus;
    if want_up {
        for (i, p) in sec.pts.iter().enumerate() {
            up[i] = vertices.len();
            vertices.push([p[0], p[1], 0.0]);
        }
    }
    if want_down {
        for (i, p) in sec.pts.iter().enumerate() {
            if want_up && p[1] == 0.0 && shared([p[0], 0.0]) {
                down[i] = up[i];
            } else {
                down[i] = vertices.len();
                vertices.push([p[0], -p[1], 0.0]);
            }
        }
    }
    let mut cells = Vec::new();
    let mut regions = Vec::new();
    if want_up {
        for t in &sec.tris {
            cells.extend(t.iter().map(|&i| up[i]));
            regions.push(Region::Plus);
        }
    }
    if want_down {
        for t in &sec.tris {
            cells.extend(t.iter().map(|&i| down[i]));
            regions.push(Region::Minus);
        }
    }
    SieveMesh::from_cells(2, vertices, cells, regions, prov)
}

fn build_3d(pipe: PipeParams, kind: MeshKind, holes: &[Hole], res: &MeshResolution, prov: MeshProvenance) -> Result<SieveMesh> {
    let sec = section_3d(&pipe, holes, res)?;
    let h = pipe.half_length;
    let h_near = if holes.is_empty() { res.h_far } else { res.h_hole };
    let zpos = z_levels(h, h_near, res.grading_rate, res.h_far, res.extrusion_layers);
    let mut zs: Vec<f64> = Vec::new();
    if kind != MeshKind::HalfPlus {
        zs.extend(zpos.iter().rev().map(|z| -z));
    }
    let k0 = if kind == MeshKind::HalfPlus { 0 } else { zs.len() - 1 };
    if kind != MeshKind::HalfMinus {
        let skip = if kind == MeshKind::HalfPlus { 0 } else { 1 };
        zs.extend(zpos.iter().skip(skip));
    }
    for z in &mut zs {
        if z.abs() < 1e-14 {
            *z = 0.0;
        }
    }
    let ns = sec.pts.len();
    let nl = zs.len();
    let tol = 1e-9 * pipe.radius;
    let shared = shared_on_section(kind, holes, 3, tol);
    let mut vertices: Vec<[f64; 3]> = Vec::with_capacity(ns * nl);
    for z in &zs {
        for p in &sec.pts {
            vertices.push([p[0], p[1], *z]);
        }
    }
    let mut plus_copy = vec![usize::MAX; ns];
    if kind == MeshKind::SievePipe || kind == MeshKind::OpenPipe {
        for (i, p) in sec.pts.iter().enumerate() {
            if !shared(*p) {
                plus_copy[i] = vertices.len();
                vertices.push([p[0], p[1], 0.0]);
            }
        }
    }
    let id = |k: usize, i: usize, region: Region| {
        if k == k0 && region == Region::Plus && plus_copy[i] != usize::MAX {
            plus_copy[i]
        } else {
            k * ns + i
        }
    };
    let mut cells = Vec::new();
    let mut regions = Vec::new();
    for k in 0..nl - 1 {
        let region = if k >= k0 { Region::Plus } else { Region::Minus };
        for t in &sec.tris {
            let mut s = *t;
            s.sort_unstable();
            let b = s.map(|i| id(k, i, region));
            let u = s.map(|i| id(k + 1, i, region));
            cells.extend_from_slice(&[b[0], b[1], b[2], u[0]]);
            cells.extend_from_slice(&[b[1], b[2], u[0], u[1]]);
            cells.extend_from_slice(&[b[2], u[0], u[1], u[2]]);
            regions.extend_from_slice(&[region; 3]);
        }
    }
    SieveMesh::from_cells(3, vertices, cells, regions, prov)
}

fn build(pipe: PipeParams, kind: MeshKind, layout: Option<&PerforationLayout>, res: &MeshResolution) -> Result<SieveMesh> {
    pipe.validate()?;
    res.validate()?;
    let holes = layout.map(holes_of).unwrap_or_default();
    let prov = provenance(kind, pipe, layout, res);
    let mesh = if pipe.dim == 2 {
        build_2d(pipe, kind, &holes, res, prov)?
    } else {
        build_3d(pipe, kind, &holes, res, prov)?
    };
    let mesh = super::split_locked_cells(mesh)?;
    mesh.check_quality()?;
    Ok(mesh)
}

/// Meshes `Omega_eps`. Requires `h_hole <= rho / 3` for the smallest hole.
pub fn mesh_sieve_pipe(layout: &PerforationLayout, res: &MeshResolution) -> Result<SieveMesh> {
    res.validate()?;
    if let Some(rho) = layout.min_hole_radius() {
        if res.h_hole > rho / 3.0 {
            return Err(Error::Resolution(format!(
                "h_hole = {} does not resolve hole radius {rho:.4e} (need h_hole <= {:.4e})",
                res.h_hole,
                rho / 3.0
            )));
        }
    }
    build(layout.pipe, MeshKind::SievePipe, Some(layout), res)
}

/// Meshes the plain pipe without any wall at `z = 0`.
pub fn mesh_open_pipe(pipe: PipeParams, res: &MeshResolution) -> Result<SieveMesh> {
    build(pipe, MeshKind::OpenPipe, None, res)
}

/// Meshes `Omega_-` or `Omega_+`; the whole section is tagged SIEVE.
pub fn mesh_half_domain(pipe: PipeParams, side: Region, res: &MeshResolution) -> Result<SieveMesh> {
    let kind = match side {
        Region::Minus => MeshKind::HalfMinus,
        Region::Plus => MeshKind::HalfPlus,
    };
    build(pipe, kind, None, res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_levels_end_at_h_and_grade() {
        let z = z_levels(2.0, 0.05, 1.3, 0.3, 2);
        assert_eq!(z[0], 0.0);
        assert!((z[z.len() - 1] - 2.0).abs() < 1e-14);
        let dz: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(dz.windows(2).all(|w| w[1] >= w[0] * 0.999));
        assert!(dz.iter().all(|&d| d <= 0.3 * 1.2));
    }

    #[test]
    fn seeds_respect_size() {
        let pts = seed_segment([0.0, 0.0], [1.0, 0.0], &|_| 0.1);
        assert_eq!(pts.len(), 10);
        assert_eq!(pts[0], [0.0, 0.0]);
    }
}
