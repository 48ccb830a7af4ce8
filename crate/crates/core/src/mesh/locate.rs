use std::sync::Arc;

use super::{Region, SieveMesh};
use crate::fem::element::barycentric_of;

/// Bucket grid over cell bounding boxes.
#[derive(Debug)]
pub struct PointLocator {
    mesh: Arc<SieveMesh>,
    lo: [f64; 3],
    cell_size: [f64; 3],
    n: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: Arc<SieveMesh>) -> Self {
        let dim = mesh.dim;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &mesh.vertices {
            for d in 0..dim {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let per_axis = ((mesh.n_cells() as f64 / 2.0).powf(1.0 / dim as f64).ceil() as usize).clamp(1, 256);
        let mut n = [1; 3];
        let mut cell_size = [1.0; 3];
        for d in 0..dim {
            n[d] = per_axis;
            cell_size[d] = ((hi[d] - lo[d]) / per_axis as f64).max(1e-300);
        }
        let mut buckets = vec![Vec::new(); n[0] * n[1] * n[2]];
        for c in 0..mesh.n_cells() {
            let pts = mesh.cell_points(c);
            let mut a = [0usize; 3];
            let mut b = [0usize; 3];
            for d in 0..dim {
                let mn = pts.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
                let mx = pts.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
                a[d] = Self::index(lo[d], cell_size[d], n[d], mn);
                b[d] = Self::index(lo[d], cell_size[d], n[d], mx);
            }
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        buckets[(i * n[1] + j) * n[2] + k].push(c);
                    }
                }
            }
        }
        PointLocator {
            mesh,
            lo,
            cell_size,
            n,
            buckets,
        }
    }

    fn index(lo: f64, size: f64, n: usize, x: f64) -> usize {
        (((x - lo) / size).floor().max(0.0) as usize).min(n - 1)
    }

    pub fn mesh(&self) -> &Arc<SieveMesh> {
        &self.mesh
    }

    /// Cell containing `x` and the barycentrics of `x` in it. Points slightly
    /// outside the mesh (polygonal boundary) snap to the nearest cell with
    /// barycentrics clamped. `region` breaks ties on the sieve plane.
    pub fn locate(&self, x: [f64; 3], region: Option<Region>) -> (usize, [f64; 4]) {
        let dim = self.mesh.dim;
        let mut idx = [0usize; 3];
        for d in 0..dim {
            idx[d] = Self::index(self.lo[d], self.cell_size[d], self.n[d], x[d]);
        }
        let mut best: Option<(f64, usize, [f64; 4])> = None;
        let mut ring = 0usize;
        loop {
            for i in idx[0].saturating_sub(ring)..=(idx[0] + ring).min(self.n[0] - 1) {
                for j in idx[1].saturating_sub(ring)..=(idx[1] + ring).min(self.n[1] - 1) {
                    for k in idx[2].saturating_sub(ring)..=(idx[2] + ring).min(self.n[2] - 1) {
                        for &c in &self.buckets[(i * self.n[1] + j) * self.n[2] + k] {
                            let lam = barycentric_of(dim, &self.mesh.cell_points(c), x);
                            let mut score = lam[..=dim].iter().copied().fold(f64::INFINITY, f64::min);
                            if let Some(r) = region {
                                if self.mesh.regions[c] != r {
                                    score -= 1.0;
                                }
                            }
                            if best.as_ref().is_none_or(|b| score > b.0) {
                                best = Some((score, c, lam));
                            }
                        }
                    }
                }
            }
            if let Some((s, _, _)) = best {
                if s >= -1e-10 || ring >= 2 {
                    break;
                }
            }
            ring += 1;
            if ring > self.n[0].max(self.n[1]).max(self.n[2]) {
                break;
            }
        }
        let (_, c, mut lam) = best.expect("locator on empty mesh");
        let mut s = 0.0;
        for l in lam[..=dim].iter_mut() {
            *l = l.max(0.0);
            s += *l;
        }
        for l in lam[..=dim].iter_mut() {
            *l /= s;
        }
        (c, lam)
    }
}
