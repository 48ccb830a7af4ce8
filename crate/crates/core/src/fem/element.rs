//! Lagrange P1/P2 shape functions written in barycentric coordinates.
//!
//! Local P2 nodes: the `dim + 1` vertices followed by the edge midpoints in
//! the order of [`edges`].

use crate::mesh::SieveMesh;

const EDGES1: [[usize; 2]; 1] = [[0, 1]];
const EDGES2: [[usize; 2]; 3] = [[0, 1], [1, 2], [0, 2]];
const EDGES3: [[usize; 2]; 6] = [[0, 1], [1, 2], [0, 2], [0, 3], [1, 3], [2, 3]];

pub const MAX_P2: usize = 10;

pub fn edges(dim: usize) -> &'static [[usize; 2]] {
    match dim {
        1 => &EDGES1,
        2 => &EDGES2,
        _ => &EDGES3,
    }
}

pub fn n_p2(dim: usize) -> usize {
    dim + 1 + edges(dim).len()
}

/// P2 basis values at barycentric point `lam`.
pub fn p2_values(dim: usize, lam: &[f64; 4]) -> [f64; MAX_P2] {
    let mut n = [0.0; MAX_P2];
    for i in 0..=dim {
        n[i] = lam[i] * (2.0 * lam[i] - 1.0);
    }
    for (k, e) in edges(dim).iter().enumerate() {
        n[dim + 1 + k] = 4.0 * lam[e[0]] * lam[e[1]];
    }
    n
}

/// P2 basis gradients given the gradients of the barycentric coordinates.
pub fn p2_grads(dim: usize, lam: &[f64; 4], grad_lam: &[[f64; 3]; 4]) -> [[f64; 3]; MAX_P2] {
    let mut g = [[0.0; 3]; MAX_P2];
    for i in 0..=dim {
        let s = 4.0 * lam[i] - 1.0;
        for d in 0..dim {
            g[i][d] = s * grad_lam[i][d];
        }
    }
    for (k, e) in edges(dim).iter().enumerate() {
        let (a, b) = (e[0], e[1]);
        for d in 0..dim {
            g[dim + 1 + k][d] = 4.0 * (lam[b] * grad_lam[a][d] + lam[a] * grad_lam[b][d]);
        }
    }
    g
}

/// Affine cell data: measure and barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub struct CellGeom {
    pub measure: f64,
    pub grad_lam: [[f64; 3]; 4],
}

impl CellGeom {
    pub fn new(dim: usize, p: &[[f64; 3]]) -> Self {
        let mut grad_lam = [[0.0; 3]; 4];
        let measure;
        if dim == 2 {
            let (a, b, c, d) = (p[1][0] - p[0][0], p[2][0] - p[0][0], p[1][1] - p[0][1], p[2][1] - p[0][1]);
            // J = [[a, b], [c, d]]
            let det = a * d - b * c;
            let inv = [[d / det, -b / det], [-c / det, a / det]];
            grad_lam[1] = [inv[0][0], inv[0][1], 0.0];
            grad_lam[2] = [inv[1][0], inv[1][1], 0.0];
            measure = 0.5 * det.abs();
        } else {
            let j = [
                [p[1][0] - p[0][0], p[2][0] - p[0][0], p[3][0] - p[0][0]],
                [p[1][1] - p[0][1], p[2][1] - p[0][1], p[3][1] - p[0][1]],
                [p[1][2] - p[0][2], p[2][2] - p[0][2], p[3][2] - p[0][2]],
            ];
            let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
            // rows of J^{-1}
            let cof = |r: usize, c: usize| {
                let rs: Vec<usize> = (0..3).filter(|&x| x != r).collect();
                let cs: Vec<usize> = (0..3).filter(|&x| x != c).collect();
                let m = j[rs[0]][cs[0]] * j[rs[1]][cs[1]] - j[rs[0]][cs[1]] * j[rs[1]][cs[0]];
                if (r + c) % 2 == 0 {
                    m
                } else {
                    -m
                }
            };
            for i in 0..3 {
                for d in 0..3 {
                    // inv[i][d] = cof(d, i) / det
                    grad_lam[i + 1][d] = cof(d, i) / det;
                }
            }
            measure = det.abs() / 6.0;
        }
        for d in 0..3 {
            grad_lam[0][d] = -(1..=dim).map(|i| grad_lam[i][d]).sum::<f64>();
        }
        CellGeom { measure, grad_lam }
    }

    pub fn of_cell(mesh: &SieveMesh, c: usize) -> Self {
        CellGeom::new(mesh.dim, &mesh.cell_points(c))
    }
}

/// Barycentric coordinates of `x` in the simplex `p`.
pub fn barycentric_of(dim: usize, p: &[[f64; 3]], x: [f64; 3]) -> [f64; 4] {
    let g = CellGeom::new(dim, p);
    let mut lam = [0.0; 4];
    let mut s = 0.0;
    for i in 1..=dim {
        lam[i] = (0..dim).map(|d| g.grad_lam[i][d] * (x[d] - p[0][d])).sum();
        s += lam[i];
    }
    lam[0] = 1.0 - s;
    lam
}

/// Physical point of barycentric coordinates `lam` in simplex `p`.
pub fn point_of(dim: usize, p: &[[f64; 3]], lam: &[f64; 4]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for i in 0..=dim {
        for d in 0..3 {
            x[d] += lam[i] * p[i][d];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_kronecker() {
        for dim in 1..=3 {
            let lam = [0.1, 0.2, 0.3, 0.4];
            let mut l = lam;
            let s: f64 = l[..=dim].iter().sum();
            for v in l[..=dim].iter_mut() {
                *v /= s;
            }
            let n = p2_values(dim, &l);
            let total: f64 = n[..n_p2(dim)].iter().sum();
            assert!((total - 1.0).abs() < 1e-14);
            // at vertex 0
            let mut v0 = [0.0; 4];
            v0[0] = 1.0;
            let n0 = p2_values(dim, &v0);
            assert!((n0[0] - 1.0).abs() < 1e-15);
            assert!(n0[1..n_p2(dim)].iter().all(|&x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = [[0.1, 0.0, 0.2], [1.0, 0.3, 0.0], [0.2, 1.1, 0.1], [0.3, 0.2, 0.9]];
        for dim in [2, 3] {
            let g = CellGeom::new(dim, &p);
            let x = [0.35, 0.3, 0.25];
            let lam = barycentric_of(dim, &p, x);
            let grads = p2_grads(dim, &lam, &g.grad_lam);
            let h = 1e-6;
            for d in 0..dim {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let np = p2_values(dim, &barycentric_of(dim, &p, xp));
                let nm = p2_values(dim, &barycentric_of(dim, &p, xm));
                for a in 0..n_p2(dim) {
                    let fd = (np[a] - nm[a]) / (2.0 * h);
                    assert!((fd - grads[a][d]).abs() < 1e-7, "dim {dim} a {a} d {d}");
                }
            }
            let back = point_of(dim, &p, &lam);
            for d in 0..dim {
                assert!((back[d] - x[d]).abs() < 1e-14);
            }
        }
    }
}
