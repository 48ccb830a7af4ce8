//! Body forces: built-ins, a manufactured planar solution, and per-vertex samples.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth planar pair `(u_m, Phi_m)` built from the stream function
/// `psi = A (R^2 - x^2)^2 z^2 (z^2 - h^2)^2`, so `u_m` is solenoidal, vanishes
/// on the lateral walls, on `z = 0` and on `z = +-h`; and
/// `Phi_m = p- + (p+ - p-)(z + h)/(2h) + a x (h^2 - z^2)` equals `p-+` on the ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSolution {
    pub radius: f64,
    pub half_length: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    /// Stream-function amplitude `A`.
    pub velocity_amplitude: f64,
    /// Transverse pressure amplitude `a`.
    pub pressure_amplitude: f64,
}

impl ManufacturedSolution {
    fn x_parts(&self, x: f64) -> [f64; 4] {
        let r2 = self.radius * self.radius;
        let s = r2 - x * x;
        // X, X', X'', X'''
        [s * s, -4.0 * x * s, -4.0 * r2 + 12.0 * x * x, 24.0 * x]
    }

    fn z_parts(&self, z: f64) -> [f64; 4] {
        let h2 = self.half_length * self.half_length;
        let h4 = h2 * h2;
        let z2 = z * z;
        [
            z2 * (z2 - h2) * (z2 - h2),
            6.0 * z2 * z2 * z - 8.0 * h2 * z2 * z + 2.0 * h4 * z,
            30.0 * z2 * z2 - 24.0 * h2 * z2 + 2.0 * h4,
            120.0 * z2 * z - 48.0 * h2 * z,
        ]
    }

    /// Velocity `(u_x, u_z)` at `(x, z)`.
    pub fn velocity(&self, p: [f64; 3]) -> [f64; 3] {
        let a = self.velocity_amplitude;
        let xs = self.x_parts(p[0]);
        let zs = self.z_parts(p[1]);
        [a * xs[0] * zs[1], -a * xs[1] * zs[0], 0.0]
    }

    /// `g[i][j] = d u_i / d x_j`.
    pub fn gradient(&self, p: [f64; 3]) -> [[f64; 3]; 3] {
        let a = self.velocity_amplitude;
        let xs = self.x_parts(p[0]);
        let zs = self.z_parts(p[1]);
        [
            [a * xs[1] * zs[1], a * xs[0] * zs[2], 0.0],
            [-a * xs[2] * zs[0], -a * xs[1] * zs[1], 0.0],
            [0.0; 3],
        ]
    }

    pub fn bernoulli(&self, p: [f64; 3]) -> f64 {
        let (x, z) = (p[0], p[1]);
        let h = self.half_length;
        self.p_minus + (self.p_plus - self.p_minus) * (z + h) / (2.0 * h) + self.pressure_amplitude * x * (h * h - z * z)
    }

    /// `f = -Lap u + (grad u - grad u^T) u + grad Phi`.
    pub fn forcing(&self, p: [f64; 3]) -> [f64; 3] {
        let a = self.velocity_amplitude;
        let (x, z) = (p[0], p[1]);
        let h = self.half_length;
        let xs = self.x_parts(x);
        let zs = self.z_parts(z);
        let lap = [
            a * (xs[2] * zs[1] + xs[0] * zs[3]),
            -a * (xs[3] * zs[0] + xs[1] * zs[2]),
        ];
        let u = self.velocity(p);
        let g = self.gradient(p);
        let w = g[0][1] - g[1][0];
        let conv = [w * u[1], -w * u[0]];
        let grad_phi = [
            self.pressure_amplitude * (h * h - z * z),
            (self.p_plus - self.p_minus) / (2.0 * h) - 2.0 * self.pressure_amplitude * x * z,
        ];
        [
            -lap[0] + conv[0] + grad_phi[0],
            -lap[1] + conv[1] + grad_phi[1],
            0.0,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Forcing {
    Zero,
    Constant { value: [f64; 3] },
    Manufactured { solution: ManufacturedSolution },
    /// Per-vertex samples interpolated linearly in each cell.
    Sampled { values: Vec<[f64; 3]> },
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::Zero
    }
}

impl Forcing {
    /// Minimal cell quadrature degree that integrates `f . phi` adequately.
    pub fn required_degree(&self) -> usize {
        match self {
            Forcing::Zero => 0,
            Forcing::Constant { .. } => 2,
            Forcing::Sampled { .. } => 3,
            Forcing::Manufactured { .. } => 5,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::Constant { value } => value.iter().all(|&v| v == 0.0),
            Forcing::Sampled { values } => values.iter().all(|v| v.iter().all(|&c| c == 0.0)),
            Forcing::Manufactured { .. } => false,
        }
    }

    pub fn check(&self, dim: usize, n_vertices: usize, degree: usize) -> Result<()> {
        if degree < self.required_degree() {
            return Err(Error::Configuration(format!(
                "quadrature degree {degree} below the degree {} required by the body force",
                self.required_degree()
            )));
        }
        match self {
            Forcing::Manufactured { .. } if dim != 2 => Err(Error::Configuration(
                "the manufactured solution is planar (dim 2 only)".into(),
            )),
            Forcing::Sampled { values } if values.len() != n_vertices => Err(Error::Configuration(format!(
                "sampled body force has {} values for {n_vertices} vertices",
                values.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Value at physical point `x` of a cell with vertex ids `verts` and barycentrics `lam`.
    pub fn eval(&self, x: [f64; 3], verts: &[usize], lam: &[f64; 4]) -> [f64; 3] {
        match self {
            Forcing::Zero => [0.0; 3],
            Forcing::Constant { value } => *value,
            Forcing::Manufactured { solution } => solution.forcing(x),
            Forcing::Sampled { values } => {
                let mut f = [0.0; 3];
                for (i, &v) in verts.iter().enumerate() {
                    for d in 0..3 {
                        f[d] += lam[i] * values[v][d];
                    }
                }
                f
            }
        }
    }
}

pub const FIELD_HEADER: &str = "SIEVEFLOW-FIELD 1";

/// Per-vertex vector samples in the exchange format.
pub fn write_vertex_field(values: &[[f64; 3]]) -> String {
    let mut s = String::new();
    writeln!(s, "{FIELD_HEADER}").unwrap();
    writeln!(s, "VERTEX_VECTORS {}", values.len()).unwrap();
    for v in values {
        writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]).unwrap();
    }
    s.push_str("END\n");
    s
}

pub fn read_vertex_field(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(FIELD_HEADER) {
        return Err(Error::Format(format!("field must start with {FIELD_HEADER:?}")));
    }
    let n: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("VERTEX_VECTORS "))
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Format("expected VERTEX_VECTORS n".into()))?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let l = lines.next().ok_or_else(|| Error::Format("field ended early".into()))?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("field value {k}: {e}")))?;
        if xs.len() != 3 {
            return Err(Error::Format(format!("field value {k} needs three components")));
        }
        out.push([xs[0], xs[1], xs[2]]);
    }
    if lines.next().map(str::trim) != Some("END") {
        return Err(Error::Format("field must end with END".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sol() -> ManufacturedSolution {
        ManufacturedSolution {
            radius: 1.0,
            half_length: 2.0,
            p_minus: 1.0,
            p_plus: 0.0,
            velocity_amplitude: 0.05,
            pressure_amplitude: 0.3,
        }
    }

    #[test]
    fn boundary_values() {
        let m = sol();
        for t in [-0.9, -0.3, 0.0, 0.4, 0.8] {
            for z in [-2.0, 0.0, 2.0] {
                let u = m.velocity([t, z, 0.0]);
                assert!(u[0].abs() < 1e-13 && u[1].abs() < 1e-13);
            }
            for x in [-1.0, 1.0] {
                let u = m.velocity([x, 2.0 * t, 0.0]);
                assert!(u[0].abs() < 1e-13 && u[1].abs() < 1e-13);
            }
            assert!((m.bernoulli([t, -2.0, 0.0]) - 1.0).abs() < 1e-14);
            assert!(m.bernoulli([t, 2.0, 0.0]).abs() < 1e-14);
        }
    }

    #[test]
    fn forcing_round_trip() {
        let v = vec![[1.0, -2.5, 0.0], [0.1, 1e-17, 3.0]];
        let back = read_vertex_field(&write_vertex_field(&v)).unwrap();
        assert_eq!(back, v);
        assert!(read_vertex_field("junk").is_err());
    }

    #[test]
    fn degree_check() {
        let f = Forcing::Manufactured { solution: sol() };
        assert!(f.check(2, 0, 4).is_err());
        assert!(f.check(2, 0, 5).is_ok());
        assert!(f.check(3, 0, 5).is_err());
        assert!(Forcing::Sampled { values: vec![[0.0; 3]; 3] }.check(2, 4, 5).is_err());
    }
}
