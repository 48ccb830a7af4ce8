//! Pipe and perforation geometry.
//!
//! The pipe is the cylinder `|(x,y)| < R, -h < z < h` (or the channel
//! `|x| < R, -h < z < h` in the planar analogue). The sieve sits in the
//! cross-section `z = 0` and is perforated by disk-shaped holes whose radius
//! scales with `r_eps = exp(-eps^-alpha)` while their spacing scales with `eps`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap added to the minimal lattice pitch `2 * delta1 * eps` so that
/// neighbouring spacing disks are strictly separated.
pub const PITCH_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipeParams {
    /// Cross-section radius `R`.
    pub radius: f64,
    /// Half-length `h`; the pipe spans `z in (-h, h)`.
    pub half_length: f64,
    /// 3 for the cylinder, 2 for the planar channel analogue.
    pub dim: usize,
}

impl PipeParams {
    pub fn new(radius: f64, half_length: f64, dim: usize) -> Result<Self> {
        let pipe = PipeParams {
            radius,
            half_length,
            dim,
        };
        pipe.validate()?;
        Ok(pipe)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.half_length > self.radius) {
            return Err(Error::Parameter(format!(
                "pipe requires h > R > 0 (got R = {}, h = {})",
                self.radius, self.half_length
            )));
        }
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Parameter(format!(
                "dimension must be 2 or 3 (got {})",
                self.dim
            )));
        }
        Ok(())
    }

    /// Measure of the cross-section `Sigma` (length in 2D, area in 3D).
    pub fn section_measure(&self) -> f64 {
        match self.dim {
            2 => 2.0 * self.radius,
            _ => std::f64::consts::PI * self.radius * self.radius,
        }
    }

    /// Measure of the whole pipe.
    pub fn volume(&self) -> f64 {
        self.section_measure() * 2.0 * self.half_length
    }

    /// Measure of one half `Omega_-` or `Omega_+`.
    pub fn half_volume(&self) -> f64 {
        self.section_measure() * self.half_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerforationParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub epsilon_star: f64,
}

impl PerforationParams {
    pub fn new(epsilon: f64, alpha: f64, delta0: f64, delta1: f64, epsilon_star: f64) -> Result<Self> {
        let p = PerforationParams {
            epsilon,
            alpha,
            delta0,
            delta1,
            epsilon_star,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= self.epsilon_star && self.epsilon_star < 1.0) {
            return Err(Error::Parameter(format!(
                "need 0 < epsilon <= epsilon_star < 1 (got epsilon = {}, epsilon_star = {})",
                self.epsilon, self.epsilon_star
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Parameter(format!("alpha must be positive (got {})", self.alpha)));
        }
        if !(self.delta0 > 0.0 && self.delta1 > 0.0) {
            return Err(Error::Parameter(format!(
                "delta0 and delta1 must be positive (got {}, {})",
                self.delta0, self.delta1
            )));
        }
        Ok(())
    }

    pub fn r_eps(&self) -> f64 {
        (-self.epsilon.powf(-self.alpha)).exp()
    }

    /// Radius of the guard disk `delta0 * r_eps`.
    pub fn guard_radius(&self) -> f64 {
        self.delta0 * self.r_eps()
    }

    /// Radius of the spacing disk `delta1 * eps`.
    pub fn spacing_radius(&self) -> f64 {
        self.delta1 * self.epsilon
    }

    /// Radius given to every generated hole: half the guard radius.
    pub fn hole_radius(&self) -> f64 {
        0.5 * self.guard_radius()
    }
}

/// `r_eps = exp(-eps^-alpha)`.
pub fn hole_radius(epsilon: f64, alpha: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon must lie in (0,1) (got {epsilon})")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive (got {alpha})")));
    }
    Ok((-epsilon.powf(-alpha)).exp())
}

/// Upper bound `floor((R / (delta1 eps))^2)` on the number of admissible holes.
pub fn max_hole_count(radius: f64, delta1: f64, epsilon: f64) -> Result<usize> {
    if !(radius > 0.0 && delta1 > 0.0 && epsilon > 0.0) {
        return Err(Error::Parameter(format!(
            "hole-count bound needs positive inputs (got R = {radius}, delta1 = {delta1}, epsilon = {epsilon})"
        )));
    }
    let q = radius / (delta1 * epsilon);
    Ok((q * q).floor() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayoutStrategy {
    /// Regular grid of pitch `pitch` (default `2 delta1 eps (1 + PITCH_MARGIN)`) centred at the axis.
    SquareLattice { pitch: Option<f64> },
    /// Hexagonal packing; identical to the square lattice on the planar section.
    HexLattice { pitch: Option<f64> },
    /// User-supplied centers, validated as-is.
    Explicit { centers: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerforationLayout {
    pub params: PerforationParams,
    pub pipe: PipeParams,
    /// Hole centers in the section plane. In 2D only the first coordinate is used.
    pub centers: Vec<[f64; 2]>,
    pub hole_radii: Vec<f64>,
}

impl PerforationLayout {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn r_eps(&self) -> f64 {
        self.params.r_eps()
    }

    pub fn min_hole_radius(&self) -> Option<f64> {
        self.hole_radii.iter().copied().reduce(f64::min)
    }

    /// Total measure of the holes in the section.
    pub fn open_measure(&self) -> f64 {
        self.hole_radii
            .iter()
            .map(|&rho| match self.pipe.dim {
                2 => 2.0 * rho,
                _ => std::f64::consts::PI * rho * rho,
            })
            .sum()
    }

    /// Whether the section point `p` lies in the closure of some hole.
    pub fn in_hole(&self, p: [f64; 2], tol: f64) -> bool {
        self.centers.iter().zip(&self.hole_radii).any(|(c, &rho)| {
            let d = match self.pipe.dim {
                2 => (p[0] - c[0]).abs(),
                _ => ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt(),
            };
            d <= rho + tol
        })
    }

    /// A hole-free layout for the given pipe.
    pub fn empty(pipe: PipeParams, params: PerforationParams) -> Self {
        PerforationLayout {
            params,
            pipe,
            centers: Vec::new(),
            hole_radii: Vec::new(),
        }
    }

    pub fn to_document(&self) -> LayoutDocument {
        LayoutDocument {
            radius: self.pipe.radius,
            half_length: self.pipe.half_length,
            dim: self.pipe.dim,
            epsilon: self.params.epsilon,
            alpha: self.params.alpha,
            delta0: self.params.delta0,
            delta1: self.params.delta1,
            centers: self.centers.clone(),
            hole_radii: self.hole_radii.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("layout serializes")
    }

    /// Parses a layout document. `epsilon_star` is not part of the document
    /// and is set to `epsilon`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LayoutDocument =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("layout JSON: {e}")))?;
        doc.into_layout()
    }
}

/// On-disk JSON form of a layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "h")]
    pub half_length: f64,
    pub dim: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub centers: Vec<[f64; 2]>,
    pub hole_radii: Vec<f64>,
}

impl LayoutDocument {
    pub fn into_layout(self) -> Result<PerforationLayout> {
        let pipe = PipeParams::new(self.radius, self.half_length, self.dim)?;
        let params = PerforationParams::new(self.epsilon, self.alpha, self.delta0, self.delta1, self.epsilon)?;
        if self.centers.len() != self.hole_radii.len() {
            return Err(Error::Format(format!(
                "{} centers but {} hole radii",
                self.centers.len(),
                self.hole_radii.len()
            )));
        }
        Ok(PerforationLayout {
            params,
            pipe,
            centers: self.centers,
            hole_radii: self.hole_radii,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Spacing disk touches or leaves the section: `|xi| + delta1 eps >= R`.
    NotStrictlyInterior { index: usize },
    /// Guard disk does not fit in the spacing disk: `delta0 r_eps > delta1 eps`.
    GuardExceedsSpacing { index: usize },
    /// Hole is not strictly inside its guard disk.
    HoleOutsideGuard { index: usize },
    /// Spacing disks of two holes are not strictly separated.
    SpacingOverlap { first: usize, second: usize },
    /// More holes than `floor((R/(delta1 eps))^2)`.
    CountExceeded { count: usize, bound: usize },
    /// Planar layouts must have centers on the section line.
    OffSection { index: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotStrictlyInterior { index } => write!(f, "hole {index}: spacing disk not strictly interior to the section"),
            Violation::GuardExceedsSpacing { index } => write!(f, "hole {index}: guard disk exceeds spacing disk"),
            Violation::HoleOutsideGuard { index } => write!(f, "hole {index}: hole not strictly inside guard disk"),
            Violation::SpacingOverlap { first, second } => write!(f, "holes ({first}, {second}): spacing disks overlap"),
            Violation::CountExceeded { count, bound } => write!(f, "hole count {count} exceeds bound {bound}"),
            Violation::OffSection { index } => write!(f, "hole {index}: center off the planar section"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn center_norm(c: [f64; 2], dim: usize) -> f64 {
    match dim {
        2 => c[0].abs(),
        _ => (c[0] * c[0] + c[1] * c[1]).sqrt(),
    }
}

fn center_dist(a: [f64; 2], b: [f64; 2], dim: usize) -> f64 {
    center_norm([a[0] - b[0], a[1] - b[1]], dim)
}

/// Checks every layout constraint and lists the violations.
pub fn validate_layout(layout: &PerforationLayout) -> ValidationReport {
    let mut violations = Vec::new();
    let dim = layout.pipe.dim;
    let spacing = layout.params.spacing_radius();
    let guard = layout.params.guard_radius();
    let radius = layout.pipe.radius;

    for (i, (&c, &rho)) in layout.centers.iter().zip(&layout.hole_radii).enumerate() {
        if dim == 2 && c[1] != 0.0 {
            violations.push(Violation::OffSection { index: i });
        }
        if center_norm(c, dim) + spacing >= radius {
            violations.push(Violation::NotStrictlyInterior { index: i });
        }
        if guard > spacing {
            violations.push(Violation::GuardExceedsSpacing { index: i });
        }
        if !(rho > 0.0 && rho < guard) {
            violations.push(Violation::HoleOutsideGuard { index: i });
        }
    }
    for i in 0..layout.centers.len() {
        for j in i + 1..layout.centers.len() {
            if center_dist(layout.centers[i], layout.centers[j], dim) <= 2.0 * spacing {
                violations.push(Violation::SpacingOverlap { first: i, second: j });
            }
        }
    }
    if let Ok(bound) = max_hole_count(radius, layout.params.delta1, layout.params.epsilon) {
        if layout.centers.len() > bound {
            violations.push(Violation::CountExceeded {
                count: layout.centers.len(),
                bound,
            });
        }
    }
    ValidationReport { violations }
}

/// Places hole centers according to `strategy` and gives every hole the
/// radius `delta0 r_eps / 2`.
pub fn generate_layout(
    pipe: PipeParams,
    params: PerforationParams,
    strategy: &LayoutStrategy,
) -> Result<PerforationLayout> {
    pipe.validate()?;
    params.validate()?;
    let spacing = params.spacing_radius();
    if params.guard_radius() > spacing {
        return Err(Error::Parameter(format!(
            "guard radius delta0 r_eps = {:.4e} exceeds spacing radius delta1 eps = {:.4e}",
            params.guard_radius(),
            spacing
        )));
    }
    let min_pitch = 2.0 * spacing;
    let pitch_of = |p: &Option<f64>| -> Result<f64> {
        match *p {
            None => Ok(min_pitch * (1.0 + PITCH_MARGIN)),
            Some(p) if p > min_pitch => Ok(p),
            Some(p) => Err(Error::Parameter(format!(
                "lattice pitch {p} must exceed 2 delta1 eps = {min_pitch}"
            ))),
        }
    };
    let fits = |c: [f64; 2]| center_norm(c, pipe.dim) + spacing < pipe.radius;

    let centers: Vec<[f64; 2]> = match strategy {
        LayoutStrategy::Explicit { centers } => centers.clone(),
        LayoutStrategy::SquareLattice { pitch } | LayoutStrategy::HexLattice { pitch } => {
            let pitch = pitch_of(pitch)?;
            let hex = matches!(strategy, LayoutStrategy::HexLattice { .. });
            let n = (pipe.radius / pitch).ceil() as i64 + 1;
            let mut out = Vec::new();
            if pipe.dim == 2 {
                for i in -n..=n {
                    let c = [i as f64 * pitch, 0.0];
                    if fits(c) {
                        out.push(c);
                    }
                }
            } else {
                let row = if hex { pitch * 3f64.sqrt() / 2.0 } else { pitch };
                let m = (pipe.radius / row).ceil() as i64 + 1;
                for j in -m..=m {
                    let shift = if hex && j.rem_euclid(2) == 1 { 0.5 * pitch } else { 0.0 };
                    for i in -n..=n {
                        let c = [i as f64 * pitch + shift, j as f64 * row];
                        if fits(c) {
                            out.push(c);
                        }
                    }
                }
            }
            out
        }
    };

    if centers.is_empty() {
        return Err(Error::EmptyLayout(format!(
            "no center satisfies |xi| + delta1 eps < R with delta1 eps = {spacing}, R = {}",
            pipe.radius
        )));
    }
    let layout = PerforationLayout {
        params,
        pipe,
        hole_radii: vec![params.hole_radius(); centers.len()],
        centers,
    };
    let report = validate_layout(&layout);
    if !report.is_valid() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Parameter(format!("invalid layout: {}", msgs.join("; "))));
    }
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pipe(dim: usize) -> PipeParams {
        PipeParams::new(1.0, 2.0, dim).unwrap()
    }

    #[test]
    fn hole_radius_values() {
        assert_relative_eq!(hole_radius(0.5, 1.0).unwrap(), (-2.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(hole_radius(0.5, 2.0).unwrap(), (-4.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(hole_radius(0.3, 1.0).unwrap(), 0.035674, epsilon = 1e-6);
        assert_relative_eq!(hole_radius(0.5, 1.0).unwrap(), 0.135335, epsilon = 1e-6);
        assert_relative_eq!(hole_radius(0.5, 2.0).unwrap(), 0.018316, epsilon = 1e-6);
        assert!(hole_radius(1.0, 1.0).is_err());
        assert!(hole_radius(0.5, 0.0).is_err());
        assert!(hole_radius(-0.1, 1.0).is_err());
    }

    #[test]
    fn max_hole_count_values() {
        assert_eq!(max_hole_count(1.0, 0.1, 1.0).unwrap(), 100);
        assert_eq!(max_hole_count(1.0, 0.5, 0.5).unwrap(), 16);
        assert_eq!(max_hole_count(1.0, 1.0, 2.0).unwrap(), 0);
        assert!(max_hole_count(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn square_lattice_respects_section() {
        let params = PerforationParams::new(0.5, 1.0, 0.2, 0.2, 0.9).unwrap();
        let layout = generate_layout(pipe(3), params, &LayoutStrategy::SquareLattice { pitch: None }).unwrap();
        assert!(!layout.is_empty());
        assert!(layout.len() <= 100);
        for c in &layout.centers {
            assert!((c[0] * c[0] + c[1] * c[1]).sqrt() < 0.9);
        }
        assert!(validate_layout(&layout).is_valid());
    }

    #[test]
    fn lattice_at_minimal_pitch_is_rejected() {
        let params = PerforationParams::new(0.5, 1.0, 0.2, 0.2, 0.9).unwrap();
        let err = generate_layout(pipe(3), params, &LayoutStrategy::SquareLattice { pitch: Some(0.2) });
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn explicit_single_and_overlapping() {
        let params = PerforationParams::new(0.5, 1.0, 0.2, 0.2, 0.9).unwrap();
        let one = generate_layout(
            pipe(3),
            params,
            &LayoutStrategy::Explicit { centers: vec![[0.0, 0.0]] },
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        assert_relative_eq!(one.hole_radii[0], 0.1 * (-2.0f64).exp(), max_relative = 1e-14);

        let two = generate_layout(
            pipe(3),
            params,
            &LayoutStrategy::Explicit {
                centers: vec![[0.0, 0.0], [0.05, 0.0]],
            },
        );
        match two {
            Err(Error::Parameter(msg)) => assert!(msg.contains("overlap")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn boundary_contact_is_reported() {
        let params = PerforationParams::new(0.5, 1.0, 0.2, 0.2, 0.9).unwrap();
        // |xi| + delta1 eps = 0.9 + 0.1 = R
        let layout = PerforationLayout {
            params,
            pipe: pipe(3),
            centers: vec![[0.9, 0.0]],
            hole_radii: vec![params.hole_radius()],
        };
        let report = validate_layout(&layout);
        assert_eq!(report.violations, vec![Violation::NotStrictlyInterior { index: 0 }]);
    }

    #[test]
    fn count_violation_is_reported() {
        let params = PerforationParams::new(0.5, 1.0, 0.01, 1.0, 0.9).unwrap();
        // bound floor((1/0.5)^2) = 4; five centers (spacing also violated, count is what matters)
        let layout = PerforationLayout {
            params,
            pipe: pipe(3),
            centers: vec![[0.0, 0.0]; 5],
            hole_radii: vec![params.hole_radius(); 5],
        };
        let report = validate_layout(&layout);
        assert!(report
            .violations
            .contains(&Violation::CountExceeded { count: 5, bound: 4 }));
    }

    #[test]
    fn eps_too_large_gives_empty_layout() {
        let params = PerforationParams::new(0.9, 1.0, 0.1, 1.2, 0.95).unwrap();
        let err = generate_layout(pipe(3), params, &LayoutStrategy::SquareLattice { pitch: None });
        assert!(matches!(err, Err(Error::EmptyLayout(_))));
    }

    #[test]
    fn planar_lattice_on_the_line() {
        let params = PerforationParams::new(0.4, 1.0, 1.0, 0.3, 0.9).unwrap();
        let layout = generate_layout(pipe(2), params, &LayoutStrategy::SquareLattice { pitch: None }).unwrap();
        assert!(layout.centers.iter().all(|c| c[1] == 0.0));
        assert!(validate_layout(&layout).is_valid());
        let hex = generate_layout(pipe(2), params, &LayoutStrategy::HexLattice { pitch: None }).unwrap();
        assert_eq!(hex.centers, layout.centers);
    }

    #[test]
    fn json_round_trip() {
        let params = PerforationParams::new(0.5, 1.0, 0.2, 0.2, 0.5).unwrap();
        let layout = generate_layout(pipe(3), params, &LayoutStrategy::HexLattice { pitch: None }).unwrap();
        let text = layout.to_json();
        assert!(text.contains("\"R\""));
        assert!(text.contains("\"hole_radii\""));
        let back = PerforationLayout::from_json(&text).unwrap();
        assert_eq!(back, layout);
    }
}
