//! The `sieveflow` command line.
//!
//! ```text
//! sieveflow <layout|mesh|solve|limit|constants|sweep> --config <path> [--out <dir>] [--deterministic]
//! ```
//!
//! Exit codes: 0 success, 2 configuration, 3 numerical failure, 4 I/O. On
//! failure a single JSON object `{"error": kind, "exit_code": n, "message": ..}`
//! is printed on stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{
    boundary_flux, energy_identity_residual, flux, flux_stations, functional_constants, pressure_split, run_sweep,
    trace_norm_sigma,
};
use crate::config::{Geometry, RunConfig};
use crate::error::{Error, ErrorKind, Result};
use crate::fem::BcProfile;
use crate::geometry::{generate_layout, max_hole_count, validate_layout, PerforationLayout};
use crate::mesh::{
    mesh_open_pipe, mesh_quality, mesh_sieve_pipe, refine_uniform, write_mesh, write_vtk, FacetTag, SieveMesh,
};
use crate::solve::{history_csv, solve_limit_problems, solve_on_mesh, state_vtk, write_state, FlowState};

#[derive(Debug, Parser)]
#[command(name = "sieveflow", version, about = "Pressure-drop flow through a perforated sieve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `[output] directory`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Single-threaded, bit-reproducible run.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate and validate a hole layout.
    Layout(Common),
    /// Mesh the configured geometry and report its quality.
    Mesh(Common),
    /// Solve on the configured geometry.
    Solve(Common),
    /// Solve the two half-pipe limit problems.
    Limit(Common),
    /// Estimate the trace, Poincare and Bogovskii constants.
    Constants(Common),
    /// Run the epsilon sweep.
    Sweep(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Layout(c)
            | Command::Mesh(c)
            | Command::Solve(c)
            | Command::Limit(c)
            | Command::Constants(c)
            | Command::Sweep(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Layout(_) => "layout",
            Command::Mesh(_) => "mesh",
            Command::Solve(_) => "solve",
            Command::Limit(_) => "limit",
            Command::Constants(_) => "constants",
            Command::Sweep(_) => "sweep",
        }
    }
}

/// Machine-readable error record.
pub fn error_json(e: &Error) -> String {
    let kind = e.kind();
    let mut v = json!({
        "error": kind.as_str(),
        "exit_code": kind.exit_code(),
        "message": e.to_string(),
    });
    if let Error::NonConvergence { history } = e {
        v["history"] = json!(history);
    }
    v.to_string()
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = Error::Configuration(e.to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return ErrorKind::Config.exit_code();
        }
    };
    match run(&cli.command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            e.kind().exit_code()
        }
    }
}

/// Loads the configuration, prepares the output directory and executes.
pub fn run(cmd: &Command) -> Result<Vec<PathBuf>> {
    let common = cmd.common();
    let mut cfg = RunConfig::load(&common.config).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", common.config.display()),
        )),
        other => other,
    })?;
    if let Some(out) = &common.out {
        cfg.output.directory = out.clone();
    }
    cfg.output.deterministic |= common.deterministic;
    if cfg.output.deterministic {
        set_deterministic();
    }
    let out = cfg.output.directory.clone();
    std::fs::create_dir_all(&out)?;
    execute(cmd, &cfg, &out)
}

/// Sequential dense kernels and a single worker thread.
pub fn set_deterministic() {
    faer::set_global_parallelism(faer::Par::Seq);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, text)?;
        self.files.push(p);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        self.put(name, &(serde_json::to_string_pretty(v).expect("json") + "\n"))
    }
}

/// Runs `cmd` with an already loaded configuration, writing into `out`.
pub fn execute(cmd: &Command, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut w = Writer {
        dir: out,
        files: Vec::new(),
    };
    w.put("resolved_config.toml", &cfg.to_resolved_toml())?;
    let hash = cfg.hash();
    match cmd {
        Command::Layout(_) => cmd_layout(cfg, &hash, &mut w)?,
        Command::Mesh(_) => cmd_mesh(cfg, &hash, &mut w)?,
        Command::Solve(_) => cmd_solve(cfg, &hash, &mut w)?,
        Command::Limit(_) => cmd_limit(cfg, &hash, &mut w)?,
        Command::Constants(_) => cmd_constants(cfg, &mut w)?,
        Command::Sweep(_) => cmd_sweep(cfg, &hash, &mut w)?,
    }
    Ok(w.files)
}

fn layout_of(cfg: &RunConfig) -> Result<PerforationLayout> {
    generate_layout(cfg.pipe()?, cfg.perforation_params()?, &cfg.strategy())
}

/// The mesh selected by `[problem] geometry`, refined `[mesh] refinements` times.
pub fn build_mesh(cfg: &RunConfig) -> Result<SieveMesh> {
    let res = cfg.resolution()?;
    let mut mesh = match cfg.problem.geometry {
        Geometry::Sieve => mesh_sieve_pipe(&layout_of(cfg)?, &res)?,
        Geometry::Wall => mesh_sieve_pipe(&PerforationLayout::empty(cfg.pipe()?, cfg.perforation_params()?), &res)?,
        Geometry::Open => mesh_open_pipe(cfg.pipe()?, &res)?,
    };
    for _ in 0..cfg.mesh.refinements {
        mesh = refine_uniform(&mesh)?;
    }
    Ok(mesh)
}

fn cmd_layout(cfg: &RunConfig, hash: &str, w: &mut Writer) -> Result<()> {
    let layout = layout_of(cfg)?;
    let report = validate_layout(&layout);
    let p = &layout.params;
    let v = json!({
        "format": "sieveflow-layout v1",
        "config_hash": hash,
        "layout": layout.to_document(),
        "r_eps": layout.r_eps(),
        "guard_radius": p.guard_radius(),
        "spacing_radius": p.spacing_radius(),
        "hole_count": layout.len(),
        "hole_count_bound": max_hole_count(layout.pipe.radius, p.delta1, p.epsilon)?,
        "open_measure": layout.open_measure(),
        "valid": report.is_valid(),
        "violations": report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
    });
    w.json("layout.json", &v)
}

fn cmd_mesh(cfg: &RunConfig, hash: &str, w: &mut Writer) -> Result<()> {
    let mesh = build_mesh(cfg)?;
    let q = mesh_quality(&mesh)?;
    let tags: serde_json::Map<String, Value> = q
        .tag_measures
        .iter()
        .map(|(t, m)| (t.as_str().to_string(), json!(m)))
        .collect();
    let v = json!({
        "format": "sieveflow-mesh-quality v1",
        "config_hash": hash,
        "cells": q.cell_count,
        "vertices": q.vertex_count,
        "min_radius_ratio": q.min_radius_ratio,
        "mean_radius_ratio": q.mean_radius_ratio,
        "worst_cell": q.worst_cell,
        "quality_floor": mesh.provenance.resolution.quality_floor,
        "tag_measures": tags,
        "sieve_coverage": q.sieve_coverage,
        "volume": q.volume,
        "components": mesh.components().iter().max().map_or(0, |m| m + 1),
    });
    w.put("mesh.txt", &write_mesh(&mesh))?;
    w.json("mesh_quality.json", &v)?;
    if cfg.output.vtk {
        w.put("mesh.vtk", &write_vtk(&mesh, &[]))?;
    }
    Ok(())
}

fn diagnostics(state: &FlowState, stations: usize) -> Value {
    let split = pressure_split(state);
    let half = |r: &Option<crate::analysis::RegionSplit>| {
        r.as_ref().map(|s| json!({"mean": s.mean, "fluctuation_norm": s.fluctuation_norm, "volume": s.volume}))
    };
    let has = |t: FacetTag| state.mesh().has_tag(t);
    json!({
        "mode": state.mode,
        "converged": state.converged,
        "iterations": state.history.len(),
        "residual": state.residual(),
        "cells": state.mesh().n_cells(),
        "velocity_dofs": state.space.n_free(),
        "pressure_dofs": state.space.n_pressure(),
        "energy": state.dirichlet_norm(),
        "flux_section": if state.mesh().provenance.kind == crate::mesh::MeshKind::HalfPlus { None } else { Some(flux(state, 0.0)) },
        "flux_inlet": has(FacetTag::Inlet).then(|| boundary_flux(state, FacetTag::Inlet)),
        "flux_outlet": has(FacetTag::Outlet).then(|| boundary_flux(state, FacetTag::Outlet)),
        "flux_stations": flux_stations(state, stations),
        "trace_sigma": trace_norm_sigma(state),
        "pressure_minus": half(&split.minus),
        "pressure_plus": half(&split.plus),
        "energy_identity_residual": energy_identity_residual(state),
    })
}

fn cmd_solve(cfg: &RunConfig, hash: &str, w: &mut Writer) -> Result<()> {
    let mesh = Arc::new(build_mesh(cfg)?);
    let state = solve_on_mesh(
        mesh,
        BcProfile::EpsLevel,
        cfg.problem.p_minus,
        cfg.problem.p_plus,
        &cfg.forcing()?,
        cfg.problem.quadrature_degree,
        &cfg.solver,
        None,
    )?;
    let mut v = diagnostics(&state, cfg.sweep.stations);
    v["format"] = json!("sieveflow-diagnostics v1");
    v["config_hash"] = json!(hash);
    w.put("state.txt", &write_state(&state))?;
    w.put("history.csv", &history_csv(&state))?;
    w.json("diagnostics.json", &v)?;
    if cfg.output.vtk {
        w.put("state.vtk", &state_vtk(&state))?;
    }
    Ok(())
}

fn cmd_limit(cfg: &RunConfig, hash: &str, w: &mut Writer) -> Result<()> {
    let (m, p) = solve_limit_problems(
        cfg.pipe()?,
        cfg.problem.p_minus,
        cfg.problem.p_plus,
        &cfg.forcing()?,
        &cfg.resolution()?,
        cfg.problem.quadrature_degree,
        &cfg.solver,
    )?;
    let dev = |s: &FlowState, c: f64| s.phi.iter().fold(0.0f64, |a, v| a.max((v - c).abs()));
    let mut dm = diagnostics(&m, cfg.sweep.stations);
    dm["max_pressure_deviation"] = json!(dev(&m, cfg.problem.p_minus));
    let mut dp = diagnostics(&p, cfg.sweep.stations);
    dp["max_pressure_deviation"] = json!(dev(&p, cfg.problem.p_plus));
    let v = json!({
        "format": "sieveflow-limit v1",
        "config_hash": hash,
        "minus": dm,
        "plus": dp,
    });
    w.put("limit_minus.txt", &write_state(&m))?;
    w.put("limit_plus.txt", &write_state(&p))?;
    w.json("limit.json", &v)?;
    if cfg.output.vtk {
        w.put("limit_minus.vtk", &state_vtk(&m))?;
        w.put("limit_plus.vtk", &state_vtk(&p))?;
    }
    Ok(())
}

pub const CONSTANTS_HEADER: &str = "# sieveflow-constants v1";

fn cmd_constants(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let mesh = Arc::new(build_mesh(cfg)?);
    let c = functional_constants(&mesh)?;
    let opt = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
    let mut s = format!("{CONSTANTS_HEADER}\n");
    s.push_str("epsilon,r_eps,trace_const,poincare_const,bogovskii_lower,n_cells,h_far,h_hole\n");
    writeln!(
        s,
        "{},{},{},{},{},{},{},{}",
        opt(c.epsilon),
        opt(c.r_eps),
        c.trace_const,
        c.poincare_const,
        c.bogovskii_lower,
        c.n_cells,
        c.h_far,
        c.h_hole
    )
    .unwrap();
    w.put("constants.csv", &s)
}

fn cmd_sweep(cfg: &RunConfig, hash: &str, w: &mut Writer) -> Result<()> {
    let report = run_sweep(&cfg.sweep_spec()?)?;
    w.put("sweep.csv", &report.to_csv())?;
    w.put("sweep_long.csv", &report.to_long_csv())?;
    w.put("sweep.json", &report.to_json(hash))
}
