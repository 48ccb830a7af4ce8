use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    boundary_flux, distance_to_limit, energy_identity_residual, flux, flux_stations, functional_constants,
    pressure_split, trace_norm_sigma, FunctionalConstants,
};
use crate::error::{Error, Result};
use crate::fem::{BcProfile, Forcing};
use crate::geometry::{generate_layout, LayoutStrategy, PerforationParams, PipeParams};
use crate::mesh::{mesh_sieve_pipe, FacetTag, MeshResolution, Region, SieveMesh};
use crate::solve::{solve_limit_problems, solve_on_mesh, FlowState, SolverConfig};

/// One sweep over a descending family of `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub pipe: PipeParams,
    pub epsilons: Vec<f64>,
    pub alpha: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub epsilon_star: f64,
    pub strategy: LayoutStrategy,
    pub p_minus: f64,
    pub p_plus: f64,
    pub forcing: Forcing,
    /// Base resolution; `h_hole` is capped at `rho / hole_cells` per row.
    pub resolution: MeshResolution,
    /// Minimum number of rim cells per hole radius.
    pub hole_cells: f64,
    pub solver: SolverConfig,
    pub quadrature_degree: usize,
    /// Estimate trace, Poincare and Bogovskii constants per row.
    pub constants: bool,
    /// Number of flux stations.
    pub stations: usize,
    /// Warm-start each row from the previous one.
    pub warm_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub r_eps: f64,
    pub n_holes: usize,
    pub n_cells: usize,
    pub h_hole: f64,
    /// `||grad u||`.
    pub energy: f64,
    /// Flux through `z = 0`.
    pub flux: f64,
    pub flux_outlet: f64,
    /// `max_s |F(s) - F(0)| / |F(0)|`.
    pub flux_spread: f64,
    pub trace: f64,
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub p_fluct_minus: f64,
    pub p_fluct_plus: f64,
    pub dist_minus: f64,
    pub dist_plus: f64,
    pub dist_phi_minus: f64,
    pub dist_phi_plus: f64,
    pub energy_residual: f64,
    pub iterations: usize,
    pub residual: f64,
    pub constants: Option<FunctionalConstants>,
}

/// Least-squares fit `log y = exponent * log x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl Fit {
    pub fn log_log(x: &[f64], y: &[f64]) -> Fit {
        let pts: Vec<(f64, f64)> = x
            .iter()
            .zip(y)
            .filter(|(a, b)| **a > 0.0 && b.abs() > 0.0)
            .map(|(a, b)| (a.ln(), b.abs().ln()))
            .collect();
        let n = pts.len();
        if n < 2 {
            return Fit {
                exponent: f64::NAN,
                intercept: f64::NAN,
                r_squared: f64::NAN,
                n,
            };
        }
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        let exponent = sxy / sxx;
        let intercept = my - exponent * mx;
        let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
        Fit {
            exponent,
            intercept,
            r_squared,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub flux_vs_r: Fit,
    pub trace_vs_r: Fit,
    /// `max F / sqrt(r)` and `max trace / sqrt(r)` over the rows.
    pub flux_bound: f64,
    pub trace_bound: f64,
    /// `||grad u||` of the two limit states.
    pub limit_energy: [f64; 2],
    /// `max |Phi - p|` of the two limit states.
    pub limit_pressure_deviation: [f64; 2],
}

/// Max over min of a positive sequence.
pub fn spread_ratio(v: &[f64]) -> f64 {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mn = v.iter().copied().fold(f64::INFINITY, f64::min);
    mx / mn
}

impl SweepReport {
    pub const CSV_HEADER: &'static str = "# sieveflow-sweep v1";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        s.push_str(
            "epsilon,r_eps,n_holes,n_cells,h_hole,energy,flux,flux_outlet,flux_spread,trace,phi_minus,phi_plus,\
p_fluct_minus,p_fluct_plus,dist_minus,dist_plus,dist_phi_minus,dist_phi_plus,energy_residual,iterations,residual,\
trace_const,poincare_const,bogovskii_lower\n",
        );
        for r in &self.rows {
            let (t, p, b) = match &r.constants {
                Some(c) => (c.trace_const, c.poincare_const, c.bogovskii_lower),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.epsilon,
                r.r_eps,
                r.n_holes,
                r.n_cells,
                r.h_hole,
                r.energy,
                r.flux,
                r.flux_outlet,
                r.flux_spread,
                r.trace,
                r.phi_minus,
                r.phi_plus,
                r.p_fluct_minus,
                r.p_fluct_plus,
                r.dist_minus,
                r.dist_plus,
                r.dist_phi_minus,
                r.dist_phi_plus,
                r.energy_residual,
                r.iterations,
                r.residual,
                t,
                p,
                b
            )
            .unwrap();
        }
        s
    }

    /// Long format: `epsilon,r_eps,quantity,value`.
    pub fn to_long_csv(&self) -> String {
        let mut s = String::from("# sieveflow-sweep-long v1\nepsilon,r_eps,quantity,value\n");
        for r in &self.rows {
            let mut q: Vec<(&str, f64)> = vec![
                ("energy", r.energy),
                ("flux", r.flux),
                ("trace", r.trace),
                ("flux_over_sqrt_r", r.flux / r.r_eps.sqrt()),
                ("trace_over_sqrt_r", r.trace / r.r_eps.sqrt()),
                ("phi_minus", r.phi_minus),
                ("phi_plus", r.phi_plus),
                ("p_fluct_minus", r.p_fluct_minus),
                ("p_fluct_plus", r.p_fluct_plus),
                ("dist_minus", r.dist_minus),
                ("dist_plus", r.dist_plus),
                ("dist_phi_minus", r.dist_phi_minus),
                ("dist_phi_plus", r.dist_phi_plus),
            ];
            if let Some(c) = &r.constants {
                q.push(("trace_const", c.trace_const));
                q.push(("poincare_const", c.poincare_const));
                q.push(("bogovskii_lower", c.bogovskii_lower));
            }
            for (name, v) in q {
                writeln!(s, "{},{},{name},{v}", r.epsilon, r.r_eps).unwrap();
            }
        }
        s
    }

    pub fn to_json(&self, config_hash: &str) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            format: &'static str,
            config_hash: &'a str,
            flux_vs_r: Fit,
            trace_vs_r: Fit,
            flux_bound: Option<f64>,
            trace_bound: Option<f64>,
            limit_energy: [f64; 2],
            limit_pressure_deviation: [f64; 2],
            rows: usize,
            spec: &'a SweepSpec,
        }
        let finite = |v: f64| v.is_finite().then_some(v);
        let s = Summary {
            format: "sieveflow-sweep-summary v1",
            config_hash,
            flux_vs_r: self.flux_vs_r,
            trace_vs_r: self.trace_vs_r,
            flux_bound: finite(self.flux_bound),
            trace_bound: finite(self.trace_bound),
            limit_energy: self.limit_energy,
            limit_pressure_deviation: self.limit_pressure_deviation,
            rows: self.rows.len(),
            spec: &self.spec,
        };
        serde_json::to_string_pretty(&s).unwrap() + "\n"
    }

    pub fn column(&self, f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

fn max_pressure_deviation(state: &FlowState, p: f64) -> f64 {
    state.phi.iter().fold(0.0, |m, v| m.max((v - p).abs()))
}

fn row_for(
    spec: &SweepSpec,
    eps: f64,
    previous: Option<&FlowState>,
    limits: &(FlowState, FlowState),
) -> Result<(SweepRow, FlowState, Arc<SieveMesh>)> {
    let params = PerforationParams::new(eps, spec.alpha, spec.delta0, spec.delta1, spec.epsilon_star)?;
    let layout = generate_layout(spec.pipe, params, &spec.strategy)?;
    let rho = layout.min_hole_radius().unwrap_or(f64::INFINITY);
    let mut res = spec.resolution;
    res.h_hole = res.h_hole.min(rho / spec.hole_cells.max(3.0));
    let mesh = Arc::new(mesh_sieve_pipe(&layout, &res)?);
    let state = solve_on_mesh(
        mesh.clone(),
        BcProfile::EpsLevel,
        spec.p_minus,
        spec.p_plus,
        &spec.forcing,
        spec.quadrature_degree,
        &spec.solver,
        if spec.warm_start { previous } else { None },
    )?;
    let f0 = flux(&state, 0.0);
    let stations = flux_stations(&state, spec.stations.max(2));
    let spread = stations.iter().map(|(_, f)| (f - f0).abs()).fold(0.0, f64::max) / f0.abs().max(f64::MIN_POSITIVE);
    let split = pressure_split(&state);
    let (m, p) = (split.minus.expect("minus half"), split.plus.expect("plus half"));
    let dm = distance_to_limit(&state, &limits.0, Region::Minus);
    let dp = distance_to_limit(&state, &limits.1, Region::Plus);
    let row = SweepRow {
        epsilon: eps,
        r_eps: layout.r_eps(),
        n_holes: layout.len(),
        n_cells: mesh.n_cells(),
        h_hole: res.h_hole,
        energy: state.dirichlet_norm(),
        flux: f0,
        flux_outlet: boundary_flux(&state, FacetTag::Outlet),
        flux_spread: spread,
        trace: trace_norm_sigma(&state),
        phi_minus: m.mean,
        phi_plus: p.mean,
        p_fluct_minus: m.fluctuation_norm,
        p_fluct_plus: p.fluctuation_norm,
        dist_minus: dm.velocity_h1,
        dist_plus: dp.velocity_h1,
        dist_phi_minus: dm.pressure_l2,
        dist_phi_plus: dp.pressure_l2,
        energy_residual: energy_identity_residual(&state),
        iterations: state.history.len(),
        residual: state.residual(),
        constants: None,
    };
    Ok((row, state, mesh))
}

/// Layout, mesh, solve and diagnostics for every `epsilon`, plus the limit
/// problems and the decay fits.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    if spec.epsilons.is_empty() {
        return Err(Error::Configuration("sweep needs at least one epsilon".into()));
    }
    if spec.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Configuration("sweep epsilons must be strictly descending".into()));
    }
    let limits = solve_limit_problems(
        spec.pipe,
        spec.p_minus,
        spec.p_plus,
        &spec.forcing,
        &spec.resolution,
        spec.quadrature_degree,
        &spec.solver,
    )?;
    let mut rows = Vec::new();
    let mut meshes = Vec::new();
    let mut previous: Option<FlowState> = None;
    for &eps in &spec.epsilons {
        let (row, state, mesh) = row_for(spec, eps, previous.as_ref(), &limits)?;
        rows.push(row);
        meshes.push(mesh);
        previous = Some(state);
    }
    if spec.constants {
        let consts: Vec<Result<FunctionalConstants>> = meshes.par_iter().map(functional_constants).collect();
        for (row, c) in rows.iter_mut().zip(consts) {
            row.constants = Some(c?);
        }
    }
    let r: Vec<f64> = rows.iter().map(|x| x.r_eps).collect();
    let fl: Vec<f64> = rows.iter().map(|x| x.flux).collect();
    let tr: Vec<f64> = rows.iter().map(|x| x.trace).collect();
    let bound = |v: &[f64]| {
        v.iter()
            .zip(&r)
            .map(|(a, b)| a.abs() / b.sqrt())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(SweepReport {
        flux_vs_r: Fit::log_log(&r, &fl),
        trace_vs_r: Fit::log_log(&r, &tr),
        flux_bound: bound(&fl),
        trace_bound: bound(&tr),
        limit_energy: [limits.0.dirichlet_norm(), limits.1.dirichlet_norm()],
        limit_pressure_deviation: [
            max_pressure_deviation(&limits.0, spec.p_minus),
            max_pressure_deviation(&limits.1, spec.p_plus),
        ],
        spec: spec.clone(),
        rows,
    })
}
