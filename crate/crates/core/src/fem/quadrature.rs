//! Conical-product (Stroud) rules on the reference simplex
//! `{x_i >= 0, sum x_i <= 1}`, built from Gauss-Jacobi and Gauss-Legendre
//! rules on `[0, 1]`.

use faer::{Mat, Side};

/// Gauss-Jacobi rule on `[0, 1]` for the weight `(1 - t)^alpha`, via the
/// Golub-Welsch eigenproblem of the Jacobi matrix.
pub fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let beta = 0.0;
    let ab = alpha + beta;
    let mut j = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        j[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
            let den = (2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0);
            let off = (num / den).sqrt();
            j[(k, k + 1)] = off;
            j[(k + 1, k)] = off;
        }
    }
    let evd = j.self_adjoint_eigen(Side::Lower).expect("symmetric tridiagonal eigenproblem");
    // mu0 = int_{-1}^{1} (1-x)^alpha dx
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let scale = 2f64.powf(alpha + 1.0);
    let s = evd.S();
    let u = evd.U();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let x = s[i];
        nodes.push(0.5 * (1.0 + x));
        weights.push(mu0 * u[(0, i)] * u[(0, i)] / scale);
    }
    (nodes, weights)
}

pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi(n, 0.0)
}

/// Points and weights on the reference simplex; weights sum to `1 / dim!`.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates `(1 - sum x, x_1, .., x_dim)` of point `q`.
    pub fn barycentric(&self, q: usize) -> [f64; 4] {
        let p = self.points[q];
        let mut lam = [0.0; 4];
        let mut s = 0.0;
        for i in 0..self.dim {
            lam[i + 1] = p[i];
            s += p[i];
        }
        lam[0] = 1.0 - s;
        lam
    }
}

/// Rule exact for polynomials of total degree `degree` on the `dim`-simplex.
pub fn simplex_rule(dim: usize, degree: usize) -> Quadrature {
    let n = degree / 2 + 1;
    let (xl, wl) = gauss_legendre(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        0 => {
            points.push([0.0; 3]);
            weights.push(1.0);
        }
        1 => {
            for i in 0..n {
                points.push([xl[i], 0.0, 0.0]);
                weights.push(wl[i]);
            }
        }
        2 => {
            let (x1, w1) = gauss_jacobi(n, 1.0);
            for i in 0..n {
                for j in 0..n {
                    let u = x1[i];
                    points.push([u, (1.0 - u) * xl[j], 0.0]);
                    weights.push(w1[i] * wl[j]);
                }
            }
        }
        3 => {
            let (x2, w2) = gauss_jacobi(n, 2.0);
            let (x1, w1) = gauss_jacobi(n, 1.0);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let u = x2[i];
                        let v = x1[j];
                        points.push([u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * xl[k]]);
                        weights.push(w2[i] * w1[j] * wl[k]);
                    }
                }
            }
        }
        _ => panic!("unsupported simplex dimension {dim}"),
    }
    Quadrature {
        dim,
        degree,
        points,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact integral of `x^a y^b z^c` over the reference simplex.
    fn monomial(dim: usize, e: [u32; 3]) -> f64 {
        let s: u32 = e[..dim].iter().sum();
        let num: f64 = e[..dim].iter().map(|&k| factorial(k)).product();
        num / factorial(s + dim as u32)
    }

    #[test]
    fn exact_on_monomials() {
        for dim in 1..=3 {
            for degree in [1, 2, 4, 5, 7] {
                let q = simplex_rule(dim, degree);
                for a in 0..=degree as u32 {
                    for b in 0..=(degree as u32 - a) {
                        for c in 0..=(degree as u32 - a - b) {
                            let e = [a, if dim > 1 { b } else { 0 }, if dim > 2 { c } else { 0 }];
                            let approx: f64 = q
                                .points
                                .iter()
                                .zip(&q.weights)
                                .map(|(p, w)| {
                                    w * (0..dim).map(|i| p[i].powi(e[i] as i32)).product::<f64>()
                                })
                                .sum();
                            let exact = monomial(dim, e);
                            assert!(
                                (approx - exact).abs() < 1e-13,
                                "dim {dim} degree {degree} exponents {e:?}: {approx} vs {exact}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn jacobi_weights_sum() {
        for alpha in [0.0, 1.0, 2.0] {
            let (x, w) = gauss_jacobi(4, alpha);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0 / (alpha + 1.0)).abs() < 1e-14);
            assert!(x.iter().all(|&t| t > 0.0 && t < 1.0));
        }
    }
}
