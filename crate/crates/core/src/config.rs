//! Run configuration: one TOML file with `[pipe]`, `[perforation]`, `[mesh]`,
//! `[solver]`, `[problem]`, `[sweep]` and `[output]` sections.
//!
//! Every section is optional and falls back to its defaults; unknown keys
//! are rejected. A resolved copy (all defaults filled in) is written next to
//! the outputs of every run and parses back to the same configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::SweepSpec;
use crate::error::{Error, Result};
use crate::fem::{read_vertex_field, Forcing, ManufacturedSolution, DEFAULT_QUADRATURE_DEGREE};
use crate::geometry::{LayoutStrategy, PerforationParams, PipeParams};
use crate::mesh::MeshResolution;
use crate::solve::SolverConfig;

pub const CONFIG_HEADER: &str = "# sieveflow-config v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipeSection {
    pub radius: f64,
    pub half_length: f64,
    pub dim: usize,
}

impl Default for PipeSection {
    fn default() -> Self {
        PipeSection {
            radius: 1.0,
            half_length: 2.0,
            dim: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    SquareLattice,
    HexLattice,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerforationSection {
    pub epsilon: f64,
    pub alpha: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub epsilon_star: f64,
    pub layout: LayoutKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pitch: Option<f64>,
    /// Only for `layout = "explicit"`.
    pub centers: Vec<[f64; 2]>,
}

impl Default for PerforationSection {
    fn default() -> Self {
        PerforationSection {
            epsilon: 0.6,
            alpha: 1.0,
            delta0: 0.75,
            delta1: 0.25,
            epsilon_star: 0.6,
            layout: LayoutKind::SquareLattice,
            pitch: None,
            centers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// The perforated pipe.
    Sieve,
    /// The pipe without a wall at `z = 0`.
    Open,
    /// The pipe with an unperforated wall at `z = 0`.
    Wall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    /// Falls back to the per-dimension default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_far: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_hole: Option<f64>,
    pub grading_rate: f64,
    pub extrusion_layers: usize,
    pub quality_floor: f64,
    /// Uniform refinements applied after generation.
    pub refinements: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        let r = MeshResolution::default();
        MeshSection {
            h_far: None,
            h_hole: None,
            grading_rate: r.grading_rate,
            extrusion_layers: r.extrusion_layers,
            quality_floor: r.quality_floor,
            refinements: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    Constant {
        value: [f64; 3],
    },
    /// The planar manufactured solution on the configured pipe and pressures.
    Manufactured {
        velocity_amplitude: f64,
        pressure_amplitude: f64,
    },
    /// Per-vertex samples in the field exchange format, relative to the config file.
    Sampled {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub p_minus: f64,
    pub p_plus: f64,
    pub geometry: Geometry,
    pub quadrature_degree: usize,
    pub forcing: ForcingSpec,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            p_minus: 1.0,
            p_plus: 0.0,
            geometry: Geometry::Sieve,
            quadrature_degree: DEFAULT_QUADRATURE_DEGREE,
            forcing: ForcingSpec::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Strictly descending.
    pub epsilons: Vec<f64>,
    /// Rim cells per hole radius; `h_hole` is capped at `rho / hole_cells`.
    pub hole_cells: f64,
    pub constants: bool,
    pub stations: usize,
    pub warm_start: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            epsilons: vec![0.6, 0.5, 0.4, 0.3],
            hole_cells: 10.0,
            constants: false,
            stations: 5,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub vtk: bool,
    pub deterministic: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("sieveflow-out"),
            vtk: true,
            deterministic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipe: PipeSection,
    pub perforation: PerforationSection,
    pub mesh: MeshSection,
    pub solver: SolverConfig,
    pub problem: ProblemSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
    /// Directory that relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Configuration(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pipe()?;
        self.perforation_params()?;
        self.resolution()?.validate()?;
        self.solver.validate()?;
        if self.problem.quadrature_degree < 4 {
            return Err(Error::Configuration(format!(
                "quadrature_degree must be at least 4 (got {})",
                self.problem.quadrature_degree
            )));
        }
        if !(self.problem.p_minus.is_finite() && self.problem.p_plus.is_finite()) {
            return Err(Error::Configuration("p_minus and p_plus must be finite".into()));
        }
        if self.perforation.layout == LayoutKind::Explicit && self.perforation.centers.is_empty() {
            return Err(Error::Configuration("explicit layout needs at least one center".into()));
        }
        let eps = &self.sweep.epsilons;
        if eps.is_empty() || eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Configuration("sweep epsilons must be non-empty and strictly descending".into()));
        }
        if !(self.sweep.hole_cells >= 3.0) {
            return Err(Error::Configuration(format!(
                "sweep hole_cells must be at least 3 (got {})",
                self.sweep.hole_cells
            )));
        }
        if self.sweep.stations < 2 {
            return Err(Error::Configuration("sweep needs at least 2 flux stations".into()));
        }
        if let ForcingSpec::Manufactured { .. } = self.problem.forcing {
            if self.pipe.dim != 2 {
                return Err(Error::Configuration("the manufactured forcing is planar (dim 2 only)".into()));
            }
        }
        Ok(())
    }

    pub fn pipe(&self) -> Result<PipeParams> {
        PipeParams::new(self.pipe.radius, self.pipe.half_length, self.pipe.dim)
    }

    pub fn perforation_params(&self) -> Result<PerforationParams> {
        let p = &self.perforation;
        PerforationParams::new(p.epsilon, p.alpha, p.delta0, p.delta1, p.epsilon_star)
    }

    pub fn strategy(&self) -> LayoutStrategy {
        let p = &self.perforation;
        match p.layout {
            LayoutKind::SquareLattice => LayoutStrategy::SquareLattice { pitch: p.pitch },
            LayoutKind::HexLattice => LayoutStrategy::HexLattice { pitch: p.pitch },
            LayoutKind::Explicit => LayoutStrategy::Explicit {
                centers: p.centers.clone(),
            },
        }
    }

    pub fn resolution(&self) -> Result<MeshResolution> {
        let d = MeshResolution::default_for_dim(self.pipe.dim);
        let r = MeshResolution {
            h_far: self.mesh.h_far.unwrap_or(d.h_far),
            h_hole: self.mesh.h_hole.unwrap_or(d.h_hole),
            grading_rate: self.mesh.grading_rate,
            extrusion_layers: self.mesh.extrusion_layers,
            quality_floor: self.mesh.quality_floor,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn forcing(&self) -> Result<Forcing> {
        Ok(match &self.problem.forcing {
            ForcingSpec::Zero => Forcing::Zero,
            ForcingSpec::Constant { value } => Forcing::Constant { value: *value },
            ForcingSpec::Manufactured {
                velocity_amplitude,
                pressure_amplitude,
            } => Forcing::Manufactured {
                solution: ManufacturedSolution {
                    radius: self.pipe.radius,
                    half_length: self.pipe.half_length,
                    p_minus: self.problem.p_minus,
                    p_plus: self.problem.p_plus,
                    velocity_amplitude: *velocity_amplitude,
                    pressure_amplitude: *pressure_amplitude,
                },
            },
            ForcingSpec::Sampled { path } => {
                let text = std::fs::read_to_string(self.base_dir.join(path))?;
                Forcing::Sampled {
                    values: read_vertex_field(&text)?,
                }
            }
        })
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let p = &self.perforation;
        Ok(SweepSpec {
            pipe: self.pipe()?,
            epsilons: self.sweep.epsilons.clone(),
            alpha: p.alpha,
            delta0: p.delta0,
            delta1: p.delta1,
            epsilon_star: p.epsilon_star,
            strategy: self.strategy(),
            p_minus: self.problem.p_minus,
            p_plus: self.problem.p_plus,
            forcing: self.forcing()?,
            resolution: self.resolution()?,
            hole_cells: self.sweep.hole_cells,
            solver: self.solver.clone(),
            quadrature_degree: self.problem.quadrature_degree,
            constants: self.sweep.constants,
            stations: self.sweep.stations,
            warm_start: self.sweep.warm_start,
        })
    }

    /// The configuration with every default spelled out.
    pub fn to_resolved_toml(&self) -> String {
        let mut full = self.clone();
        if full.mesh.h_far.is_none() || full.mesh.h_hole.is_none() {
            let d = MeshResolution::default_for_dim(full.pipe.dim);
            full.mesh.h_far.get_or_insert(d.h_far);
            full.mesh.h_hole.get_or_insert(d.h_hole);
        }
        if let ForcingSpec::Sampled { path } = &mut full.problem.forcing {
            *path = self.base_dir.join(&*path);
        }
        let body = toml::to_string(&full).expect("config serializes");
        format!("{CONFIG_HEADER}\n{body}")
    }

    /// SHA-256 of the resolved configuration without the `[output]` section.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        let digest = Sha256::digest(c.to_resolved_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.sweep.epsilons, vec![0.6, 0.5, 0.4, 0.3]);
        assert_eq!(c.resolution().unwrap(), MeshResolution::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            RunConfig::parse("[pipe]\nradius = 1.0\ncolour = 3\n"),
            Err(Error::Configuration(_))
        ));
        assert!(RunConfig::parse("[nonsense]\n").is_err());
        assert!(RunConfig::parse("[solver]\ntolerance = 1e-9\nfoo = 1\n").is_err());
    }

    #[test]
    fn resolved_round_trip() {
        let c = RunConfig::parse(
            "[pipe]\ndim = 3\n[perforation]\nlayout = \"hex_lattice\"\n[problem]\nforcing = { kind = \"constant\", value = [0.0, 0.0, 1.0] }\n",
        )
        .unwrap();
        let text = c.to_resolved_toml();
        assert!(text.starts_with(CONFIG_HEADER));
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.resolution().unwrap(), MeshResolution::default_for_dim(3));
        assert_eq!(back.to_resolved_toml(), text);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn hash_ignores_output() {
        let a = RunConfig::parse("").unwrap();
        let b = RunConfig::parse("[output]\ndirectory = \"elsewhere\"\n").unwrap();
        let c = RunConfig::parse("[problem]\np_plus = 0.5\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::parse("[pipe]\nhalf_length = 0.5\n").is_err());
        assert!(RunConfig::parse("[sweep]\nepsilons = [0.3, 0.5]\n").is_err());
        assert!(RunConfig::parse("[problem]\nquadrature_degree = 2\n").is_err());
        assert!(RunConfig::parse("[perforation]\nlayout = \"explicit\"\n").is_err());
    }
}
