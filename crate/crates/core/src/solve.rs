//! Stationary solves: Stokes, damped Picard and Newton for the rotational
//! Navier-Stokes system, and the two decoupled half-pipe limit problems.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assemble::{factorial, RefTables};
use crate::fem::element::p2_grads;
use crate::fem::{assemble, build_space, BcProfile, DiscreteSystem, Forcing, FunctionSpace};
use crate::geometry::PipeParams;
use crate::mesh::{mesh_half_domain, PointLocator, Region, SieveMesh, VtkField};
use crate::sparse::{norm2, solve_saddle, LinearSolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Stokes,
    NavierStokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scheme {
    Picard,
    Newton,
    PicardThenNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: Mode,
    pub scheme: Scheme,
    /// Relative nonlinear residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
    /// Picard-to-Newton switch on the relative residual.
    pub newton_switch: f64,
    /// Iterations without a new best residual before giving up.
    pub patience: usize,
    pub linear_solver: LinearSolverKind,
    pub linear_tolerance: f64,
    pub linear_max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::NavierStokes,
            scheme: Scheme::PicardThenNewton,
            tolerance: 1e-10,
            max_iterations: 60,
            damping: 0.7,
            newton_switch: 1e-3,
            patience: 8,
            linear_solver: LinearSolverKind::Auto,
            linear_tolerance: 1e-12,
            linear_max_iterations: 2000,
        }
    }
}

impl SolverConfig {
    pub fn stokes() -> Self {
        SolverConfig {
            mode: Mode::Stokes,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Configuration(m.to_string()));
        if !(self.tolerance > 0.0 && self.linear_tolerance > 0.0) {
            return bad("solver tolerances must be positive");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if self.max_iterations == 0 || self.patience == 0 {
            return bad("max_iterations and patience must be positive");
        }
        Ok(())
    }
}

/// Discrete velocity (all DOFs, constraints applied) and Bernoulli pressure
/// (per vertex) with the data that produced them.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub space: Arc<FunctionSpace>,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub p_minus: f64,
    pub p_plus: f64,
    pub forcing: Forcing,
    pub mode: Mode,
    pub history: Vec<f64>,
    pub converged: bool,
}

impl FlowState {
    pub fn mesh(&self) -> &Arc<SieveMesh> {
        &self.space.mesh
    }

    /// `||grad u||_{L2}` over the whole mesh.
    pub fn dirichlet_norm(&self) -> f64 {
        dirichlet_norm(&self.space, &self.u, None)
    }

    pub fn residual(&self) -> f64 {
        self.history.last().copied().unwrap_or(0.0)
    }

    /// Velocity at every vertex, flattened with `dim` components.
    pub fn vertex_velocity(&self) -> Vec<f64> {
        let n = self.space.n_pressure() * self.space.dim;
        self.u[..n].to_vec()
    }
}

/// `||grad u||_{L2}` over all cells or over one region.
pub fn dirichlet_norm(space: &FunctionSpace, u: &[f64], region: Option<Region>) -> f64 {
    let dim = space.dim;
    let tables = RefTables::new(dim, 2);
    let mesh = &space.mesh;
    let mut s = 0.0;
    for c in 0..mesh.n_cells() {
        if region.is_some_and(|r| mesh.regions[c] != r) {
            continue;
        }
        let g = &space.geom[c];
        let nodes = space.cell_nodes(c);
        for q in 0..tables.quad.len() {
            let gr = p2_grads(dim, &tables.lam[q], &g.grad_lam);
            let (_, gu) = crate::fem::assemble::eval_at(dim, nodes, u, &tables.n[q], &gr);
            let w = tables.quad.weights[q] * g.measure * factorial(dim);
            s += w * gu.iter().flatten().map(|v| v * v).sum::<f64>();
        }
    }
    s.sqrt()
}

struct Residual {
    ru: Vec<f64>,
    rp: Vec<f64>,
    rel: f64,
}

fn residual(sys: &DiscreteSystem, rhs: &[f64], scale: f64, u: &[f64], phi: &[f64], nonlinear: bool) -> Residual {
    let space = &sys.space;
    let mut ru = sys.a.matvec(u);
    if nonlinear {
        let full = space.to_full(u);
        let cu = sys.convection(&full).matvec(u);
        for (r, c) in ru.iter_mut().zip(cu) {
            *r += c;
        }
    }
    let bt = sys.b.matvec_t(phi);
    for i in 0..ru.len() {
        ru[i] -= bt[i] + rhs[i];
    }
    let rp: Vec<f64> = sys.b.matvec(u).iter().map(|v| -v).collect();
    let rel = (norm2(&ru).powi(2) + norm2(&rp).powi(2)).sqrt() / scale;
    Residual { ru, rp, rel }
}

/// Solves the assembled problem. `initial` is a full-DOF velocity guess
/// (zero when absent).
pub fn solve_stationary(sys: &DiscreteSystem, cfg: &SolverConfig, initial: Option<&[f64]>) -> Result<FlowState> {
    cfg.validate()?;
    let space = &sys.space;
    let nf = space.n_free();
    let np = space.n_pressure();
    let rhs = sys.rhs();
    let rhs_norm = norm2(&rhs);
    let scale = if rhs_norm > 0.0 { rhs_norm } else { 1.0 };
    let blocks: Vec<usize> = space.free_dofs.iter().map(|g| g % space.dim).collect();
    let linear = |k: &crate::sparse::Csr, top: &[f64], bottom: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut r = top.to_vec();
        r.extend_from_slice(bottom);
        let x = solve_saddle(
            k,
            &sys.b,
            &sys.pressure_mass,
            &blocks,
            &r,
            cfg.linear_solver,
            cfg.linear_tolerance,
            cfg.linear_max_iterations,
        )?;
        Ok((x[..nf].to_vec(), x[nf..].to_vec()))
    };
    let finish = |u: Vec<f64>, phi: Vec<f64>, history: Vec<f64>, converged: bool| FlowState {
        space: sys.space.clone(),
        u: space.to_full(&u),
        phi,
        p_minus: sys.p_minus,
        p_plus: sys.p_plus,
        forcing: sys.forcing.clone(),
        mode: cfg.mode,
        history,
        converged,
    };

    if cfg.mode == Mode::Stokes {
        let (u, phi) = linear(&sys.a, &rhs, &vec![0.0; np])?;
        let r = residual(sys, &rhs, scale, &u, &phi, false);
        let ok = r.rel <= cfg.tolerance.max(10.0 * cfg.linear_tolerance);
        if !ok {
            return Err(Error::NonConvergence { history: vec![r.rel] });
        }
        return Ok(finish(u, phi, vec![r.rel], true));
    }

    let mut u = match initial {
        Some(full) => space.to_free(full),
        None => vec![0.0; nf],
    };
    let mut phi = vec![0.0; np];
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    // pressure is not part of the Picard fixed point; seed it with one solve
    let mut seeded = false;
    for _ in 0..cfg.max_iterations {
        let r = residual(sys, &rhs, scale, &u, &phi, true);
        if !r.rel.is_finite() {
            history.push(r.rel);
            return Err(Error::NonConvergence { history });
        }
        history.push(r.rel);
        if r.rel <= cfg.tolerance {
            return Ok(finish(u, phi, history, true));
        }
        if r.rel < best * (1.0 - 1e-3) {
            best = r.rel;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                return Err(Error::NonConvergence { history });
            }
        }
        let newton = match cfg.scheme {
            Scheme::Newton => true,
            Scheme::Picard => false,
            Scheme::PicardThenNewton => seeded && r.rel < cfg.newton_switch,
        };
        let full = space.to_full(&u);
        let conv = sys.convection(&full);
        if newton {
            let j = sys.a.plus_scaled(1.0, &conv).plus_scaled(1.0, &sys.newton(&full));
            let top: Vec<f64> = r.ru.iter().map(|v| -v).collect();
            let bottom: Vec<f64> = r.rp.iter().map(|v| -v).collect();
            let (du, dphi) = linear(&j, &top, &bottom)?;
            for (x, d) in u.iter_mut().zip(du) {
                *x += d;
            }
            for (x, d) in phi.iter_mut().zip(dphi) {
                *x += d;
            }
        } else {
            let k = sys.a.plus_scaled(1.0, &conv);
            let (us, ps) = linear(&k, &rhs, &vec![0.0; np])?;
            let w = if seeded { cfg.damping } else { 1.0 };
            for (x, s) in u.iter_mut().zip(us) {
                *x += w * (s - *x);
            }
            for (x, s) in phi.iter_mut().zip(ps) {
                *x += w * (s - *x);
            }
        }
        seeded = true;
    }
    let r = residual(sys, &rhs, scale, &u, &phi, true);
    history.push(r.rel);
    if r.rel <= cfg.tolerance {
        return Ok(finish(u, phi, history, true));
    }
    Err(Error::NonConvergence { history })
}

/// Which region a node of `space` belongs to (first cell listing it).
fn node_regions(space: &FunctionSpace) -> Vec<Option<Region>> {
    let mut out = vec![None; space.n_nodes];
    for c in 0..space.mesh.n_cells() {
        for &n in space.cell_nodes(c) {
            if out[n].is_none() {
                out[n] = Some(space.mesh.regions[c]);
            }
        }
    }
    out
}

/// Interpolates a state's velocity onto the nodes of another space and
/// applies that space's constraints (warm starts across meshes).
pub fn transfer_velocity(from: &FlowState, to: &FunctionSpace, locator: &PointLocator) -> Vec<f64> {
    let regions = node_regions(to);
    let mut out = vec![0.0; to.n_dofs()];
    let dim = to.dim;
    for (n, &x) in to.node_coords.iter().enumerate() {
        let (c, lam) = locator.locate(x, regions[n]);
        let (v, _) = from.space.velocity_at(&from.u, c, &lam);
        out[n * dim..(n + 1) * dim].copy_from_slice(&v[..dim]);
    }
    to.apply_constraints(&mut out);
    out
}

/// Builds space and system for a mesh and solves.
pub fn solve_on_mesh(
    mesh: Arc<SieveMesh>,
    profile: BcProfile,
    p_minus: f64,
    p_plus: f64,
    forcing: &Forcing,
    quadrature_degree: usize,
    cfg: &SolverConfig,
    initial: Option<&FlowState>,
) -> Result<FlowState> {
    let space = Arc::new(build_space(mesh, profile)?);
    let sys = assemble(space.clone(), p_minus, p_plus, forcing, quadrature_degree)?;
    let guess = initial.map(|s| {
        let loc = PointLocator::new(s.mesh().clone());
        transfer_velocity(s, &space, &loc)
    });
    solve_stationary(&sys, cfg, guess.as_deref())
}

/// The homogenized problems: one solve on each half pipe with the whole
/// section `z = 0` as a wall.
pub fn solve_limit_problems(
    pipe: PipeParams,
    p_minus: f64,
    p_plus: f64,
    forcing: &Forcing,
    res: &crate::mesh::MeshResolution,
    quadrature_degree: usize,
    cfg: &SolverConfig,
) -> Result<(FlowState, FlowState)> {
    let minus = Arc::new(mesh_half_domain(pipe, Region::Minus, res)?);
    let plus = Arc::new(mesh_half_domain(pipe, Region::Plus, res)?);
    let m = solve_on_mesh(minus, BcProfile::HalfMinus, p_minus, p_plus, forcing, quadrature_degree, cfg, None)?;
    let p = solve_on_mesh(plus, BcProfile::HalfPlus, p_minus, p_plus, forcing, quadrature_degree, cfg, None)?;
    Ok((m, p))
}

/// `p = Phi - |u|^2 / 2` at the vertices.
pub fn static_pressure(state: &FlowState) -> Vec<f64> {
    let dim = state.space.dim;
    state
        .phi
        .iter()
        .enumerate()
        .map(|(v, &p)| {
            let u = &state.u[v * dim..(v + 1) * dim];
            p - 0.5 * u.iter().map(|x| x * x).sum::<f64>()
        })
        .collect()
}

pub const STATE_HEADER: &str = "SIEVEFLOW-STATE 1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StateMeta {
    profile: BcProfile,
    mode: Mode,
    p_minus: f64,
    p_plus: f64,
    forcing: Forcing,
    converged: bool,
}

/// Coefficient arrays of a state; pair with the mesh file.
pub fn write_state(state: &FlowState) -> String {
    let meta = StateMeta {
        profile: state.space.profile,
        mode: state.mode,
        p_minus: state.p_minus,
        p_plus: state.p_plus,
        forcing: state.forcing.clone(),
        converged: state.converged,
    };
    let mut s = String::new();
    writeln!(s, "{STATE_HEADER}").unwrap();
    writeln!(s, "PROBLEM {}", serde_json::to_string(&meta).unwrap()).unwrap();
    for (name, values) in [("HISTORY", &state.history), ("VELOCITY", &state.u), ("PHI", &state.phi)] {
        writeln!(s, "{name} {}", values.len()).unwrap();
        for v in values.iter() {
            writeln!(s, "{v:?}").unwrap();
        }
    }
    s.push_str("END\n");
    s
}

pub fn read_state(text: &str, mesh: Arc<SieveMesh>) -> Result<FlowState> {
    let fmt = |m: &str| Error::Format(m.to_string());
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(STATE_HEADER) {
        return Err(fmt("state must start with the SIEVEFLOW-STATE header"));
    }
    let meta: StateMeta = lines
        .next()
        .and_then(|l| l.strip_prefix("PROBLEM "))
        .ok_or_else(|| fmt("missing PROBLEM line"))
        .and_then(|j| serde_json::from_str(j).map_err(|e| Error::Format(format!("PROBLEM: {e}"))))?;
    let mut block = |name: &str| -> Result<Vec<f64>> {
        let n: usize = lines
            .next()
            .and_then(|l| l.strip_prefix(name))
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("expected {name} n")))?;
        (0..n)
            .map(|_| {
                lines
                    .next()
                    .and_then(|l| l.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Format(format!("bad {name} value")))
            })
            .collect()
    };
    let history = block("HISTORY")?;
    let u = block("VELOCITY")?;
    let phi = block("PHI")?;
    if lines.next().map(str::trim) != Some("END") {
        return Err(fmt("state must end with END"));
    }
    let space = Arc::new(build_space(mesh, meta.profile)?);
    if u.len() != space.n_dofs() || phi.len() != space.n_pressure() {
        return Err(fmt("state arrays do not match the mesh"));
    }
    Ok(FlowState {
        space,
        u,
        phi,
        p_minus: meta.p_minus,
        p_plus: meta.p_plus,
        forcing: meta.forcing,
        mode: meta.mode,
        history,
        converged: meta.converged,
    })
}

pub fn history_csv(state: &FlowState) -> String {
    let mut s = String::from("# sieveflow-history v1\niteration,residual\n");
    for (i, r) in state.history.iter().enumerate() {
        writeln!(s, "{i},{r:e}").unwrap();
    }
    s
}

pub fn state_vtk(state: &FlowState) -> String {
    let u = state.vertex_velocity();
    let p = static_pressure(state);
    crate::mesh::write_vtk(
        state.mesh(),
        &[
            VtkField::Vector("u", &u),
            VtkField::Scalar("Phi", &state.phi),
            VtkField::Scalar("p", &p),
        ],
    )
}
