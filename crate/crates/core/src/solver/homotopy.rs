//! Continuation paths and the full existence pipeline.
//!
//! All paths are solved in the u-variable: for K ∈ {0, −1} the v-form
//! equations 𝒢[v] = RHS(v) become G[u] = RHS(η⁻¹(u)) with ξ(v) = ξ(η⁻¹(u)),
//! and for the spherical path 𝒢ᵗ[v] = Gᵗ[eᵛ], so e^{2v} = u².
//!
//! | path        | background | right-hand side at parameter t                     |
//! |-------------|------------|----------------------------------------------------|
//! | auxiliary   | K          | (tε + (1−t) ψ̲/ξ(ū)) ξ(u)                            |
//! | main        | K          | t ψ(z, u) + (1−t) ε ξ(u)                           |
//! | spherical   | deformed t | (1−T(t)) δ₂ u² + T(t) (ψ(z, u) − ε),  T(t) = tᵖ    |
//! | ε-removal   | K = 1      | ψ(z, u) − (1−t) ε                                  |

use serde::{Deserialize, Serialize};

use super::monitors::estimate_monitors;
use super::newton::{newton_solve, NewtonOptions};
use super::problem::{verify_subsolution, Psi, Subsolution, SubsolutionReport};
use super::report::{FailureRecord, Parameters, SolveReport, StepRecord};
use crate::curvature::CurvatureFunction;
use crate::discretization::{DiscreteField, DiscreteOperator, PolarDomain, RightHandSide};
use crate::error::{Error, Result};
use crate::spaceform::{Ambient, SpaceForm};

/// Tolerance of the node-wise comparison v ≥ v̲ at accepted steps.
pub const COMPARISON_TOLERANCE: f64 = -1e-8;
/// Tolerance of the strict-subsolution margin along the spherical path.
pub const SPHERICAL_MARGIN_TOLERANCE: f64 = 1e-12;
/// Largest exponent tried for T(t) = tᵖ.
pub const MAX_T_EXPONENT: u32 = 400;
/// Number of t-samples used to revalidate the strict subsolution near t = 1.
const DELTA1_SAMPLES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Auxiliary,
    Main,
    Spherical,
    EpsilonRemoval,
}

impl PathKind {
    pub fn label(self) -> &'static str {
        match self {
            PathKind::Auxiliary => "auxiliary",
            PathKind::Main => "main",
            PathKind::Spherical => "spherical",
            PathKind::EpsilonRemoval => "epsilon_removal",
        }
    }
}

/// Parameters of one continuation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomotopyConfig {
    pub path: PathKind,
    pub epsilon: f64,
    /// Spherical path only.
    pub delta1: f64,
    /// Spherical path only.
    pub delta2: f64,
    /// Exponent p of T(t) = tᵖ (spherical path only).
    pub t_exponent: u32,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Newton solves with at most this many iterations count as easy.
    pub easy_iterations: usize,
    pub newton: NewtonOptions,
}

impl HomotopyConfig {
    pub fn new(path: PathKind, epsilon: f64) -> Self {
        Self {
            path,
            epsilon,
            delta1: 0.05,
            delta2: 0.0,
            t_exponent: 1,
            initial_step: 0.25,
            min_step: 1e-4,
            max_step: 0.5,
            easy_iterations: 4,
            newton: NewtonOptions::default(),
        }
    }

    pub fn schedule(&self, t: f64) -> f64 {
        t.powi(self.t_exponent as i32)
    }
}

/// One path: operator data, Dirichlet data and the subsolution anchoring it.
pub struct PathProblem<'a> {
    pub domain: &'a PolarDomain,
    /// Model of the background (K = 1 for the spherical and ε-removal paths).
    pub model: SpaceForm,
    pub spec: &'a CurvatureFunction,
    pub psi: &'a dyn Psi,
    pub boundary: &'a DiscreteField,
    pub subsolution: &'a Subsolution,
    /// ψ̲ = G[ū] at every node; used by the auxiliary path and the ε bound.
    pub psi_lower: &'a [f64],
}

impl PathProblem<'_> {
    fn ambient(&self, path: PathKind, t: f64) -> Ambient {
        match path {
            PathKind::Spherical => Ambient::Deformed(t),
            _ => Ambient::Model(self.model),
        }
    }

    fn sub_u(&self, i: usize) -> f64 {
        self.subsolution.field.u(self.domain, i)
    }

    /// Path variable v used for the comparison with v̲.
    fn v_of_u(&self, path: PathKind, u: f64) -> Result<f64> {
        match path {
            PathKind::Auxiliary | PathKind::Main => self.model.eta_inverse(u),
            _ => Ok(u.ln()),
        }
    }

    fn comparison_margin(&self, path: PathKind, field: &DiscreteField) -> Result<f64> {
        let mut m = f64::INFINITY;
        for i in self.domain.interior() {
            let v = self.v_of_u(path, field.u(self.domain, i))?;
            let vs = self.v_of_u(path, self.sub_u(i))?;
            m = m.min(v - vs);
        }
        Ok(m)
    }
}

struct PathRhs<'a, 'b> {
    problem: &'b PathProblem<'a>,
    config: &'b HomotopyConfig,
    t: f64,
}

impl RightHandSide for PathRhs<'_, '_> {
    fn eval(&self, i: usize, u: f64) -> Result<(f64, f64)> {
        let p = self.problem;
        let c = self.config;
        let t = self.t;
        let node = p.domain.node(i);
        match c.path {
            PathKind::Auxiliary => {
                let (xi, dxi) = p.model.xi_of_u(u)?;
                let (xi_sub, _) = p.model.xi_of_u(p.sub_u(i))?;
                let coeff = t * c.epsilon + (1.0 - t) * p.psi_lower[i] / xi_sub;
                Ok((coeff * xi, coeff * dxi))
            }
            PathKind::Main => {
                let (xi, dxi) = p.model.xi_of_u(u)?;
                let (psi, dpsi) = p.psi.eval(node, u)?;
                Ok((t * psi + (1.0 - t) * c.epsilon * xi, t * dpsi + (1.0 - t) * c.epsilon * dxi))
            }
            PathKind::Spherical => {
                let big_t = c.schedule(t);
                let (psi, dpsi) = p.psi.eval(node, u)?;
                Ok((
                    (1.0 - big_t) * c.delta2 * u * u + big_t * (psi - c.epsilon),
                    2.0 * (1.0 - big_t) * c.delta2 * u + big_t * dpsi,
                ))
            }
            PathKind::EpsilonRemoval => {
                let (psi, dpsi) = p.psi.eval(node, u)?;
                Ok((psi - (1.0 - t) * c.epsilon, dpsi))
            }
        }
    }
}

/// Residual of the path problem at parameter t.
pub fn path_residual(
    problem: &PathProblem,
    config: &HomotopyConfig,
    t: f64,
    field: &DiscreteField,
) -> Result<Vec<f64>> {
    let op = DiscreteOperator {
        domain: problem.domain,
        ambient: problem.ambient(config.path, t),
        spec: problem.spec,
    };
    op.residual(field, problem.boundary, &PathRhs { problem, config, t })
}

/// Checks the admissibility conditions on ε, δ₁, δ₂ and T for this path.
pub fn validate_config(problem: &PathProblem, config: &HomotopyConfig) -> Result<()> {
    let d = problem.domain;
    let bad = |msg: String| Err(Error::Precondition(msg));
    if !(config.epsilon > 0.0) {
        return bad(format!("epsilon must be positive, got {}", config.epsilon));
    }
    if !(config.min_step > 0.0 && config.initial_step >= config.min_step && config.max_step >= config.initial_step) {
        return bad("continuation steps must satisfy 0 < min_step <= initial_step <= max_step".into());
    }
    match config.path {
        PathKind::Auxiliary | PathKind::Main => {
            for i in d.interior() {
                let (xi, _) = problem.model.xi_of_u(problem.sub_u(i))?;
                if !(problem.psi_lower[i] > config.epsilon * xi) {
                    return bad(format!(
                        "epsilon {} violates psi_lower > epsilon*xi(v_sub) at node {i} ({} <= {})",
                        config.epsilon,
                        problem.psi_lower[i],
                        config.epsilon * xi
                    ));
                }
            }
        }
        PathKind::Spherical => {
            let g0 = problem
                .subsolution
                .operator_values(d, Ambient::Deformed(0.0), problem.spec)?;
            let (mut g0_min, mut psi_min, mut psi_max, mut u_max) =
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for i in d.interior() {
                let (p, _) = problem.psi.eval(d.node(i), problem.sub_u(i))?;
                g0_min = g0_min.min(g0[i]);
                psi_min = psi_min.min(p);
                psi_max = psi_max.max(p);
            }
            for i in 0..d.len() {
                u_max = u_max.max(problem.sub_u(i));
            }
            if !(config.epsilon < g0_min.min(psi_min)) {
                return bad(format!(
                    "epsilon {} must be below min G0[u_sub] = {g0_min} and min psi = {psi_min}",
                    config.epsilon
                ));
            }
            if !(config.delta2 > 0.0 && config.delta2 * u_max * u_max < 0.5 * config.epsilon) {
                return bad(format!("delta2 {} violates delta2*max u_sub^2 < epsilon/2", config.delta2));
            }
            if !(config.delta1 > 0.0 && config.delta1 < 1.0) {
                return bad(format!("delta1 must lie in (0, 1), got {}", config.delta1));
            }
            let tt = config.schedule(1.0 - config.delta1);
            if !(g0_min > 2.0 * tt * psi_max) {
                return bad(format!(
                    "schedule exponent {} violates min G0[u_sub] > 2 T(1-delta1) max psi",
                    config.t_exponent
                ));
            }
            for k in 0..DELTA1_SAMPLES {
                let t = 1.0 - config.delta1 * k as f64 / (DELTA1_SAMPLES - 1) as f64;
                let gt = problem.subsolution.operator_values(d, Ambient::Deformed(t), problem.spec)?;
                for i in d.interior() {
                    let (p, _) = problem.psi.eval(d.node(i), problem.sub_u(i))?;
                    if !(gt[i] > p - 0.5 * config.epsilon) {
                        return bad(format!(
                            "delta1 {} too large: G^t[u_sub] <= psi - epsilon/2 at t = {t}, node {i}",
                            config.delta1
                        ));
                    }
                }
            }
        }
        PathKind::EpsilonRemoval => {}
    }
    Ok(())
}

/// Result of one continuation path. On failure `field` and `t_reached`
/// describe the last accepted step.
#[derive(Debug, Clone)]
pub struct ContinuationOutcome {
    pub field: DiscreteField,
    pub t_reached: f64,
    pub success: bool,
    pub steps: Vec<StepRecord>,
    pub failure: Option<FailureRecord>,
}

fn record_step(
    problem: &PathProblem,
    config: &HomotopyConfig,
    t: f64,
    step: f64,
    field: &DiscreteField,
    newton: &super::newton::NewtonRecord,
) -> Result<StepRecord> {
    let ambient = problem.ambient(config.path, t);
    let m = estimate_monitors(problem.domain, field, ambient)?;
    let comparison = problem.comparison_margin(config.path, field)?;
    let subsolution_margin = if config.path == PathKind::Spherical {
        let g = problem.subsolution.operator_values(problem.domain, ambient, problem.spec)?;
        let rhs = PathRhs { problem, config, t };
        let mut worst = f64::INFINITY;
        for i in problem.domain.interior() {
            worst = worst.min(g[i] - rhs.eval(i, problem.sub_u(i))?.0);
        }
        Some(worst)
    } else {
        None
    };
    Ok(StepRecord {
        phase: config.path.label().to_string(),
        model: problem.model.curvature_sign(),
        t,
        step,
        newton_iterations: newton.iterations,
        halvings: newton.halvings,
        residual: newton.final_residual,
        min_convexity: m.convexity_witness,
        kappa_min: m.kappa_min,
        kappa_max: m.kappa_max,
        u_min: m.u_min,
        u_max: m.u_max,
        grad_max: m.c1,
        comparison_margin: comparison,
        comparison_ok: comparison >= COMPARISON_TOLERANCE,
        subsolution_margin,
    })
}

/// Tracks the path from t = 0 to t = 1 starting from `start`. Returns an
/// error only when the configuration is inadmissible; a stalled path is
/// reported through `success = false` with the last good (t, field).
pub fn continuation_run(
    problem: &PathProblem,
    config: &HomotopyConfig,
    start: &DiscreteField,
) -> Result<ContinuationOutcome> {
    validate_config(problem, config)?;
    let solve_at = |t: f64, from: &DiscreteField| {
        let op = DiscreteOperator {
            domain: problem.domain,
            ambient: problem.ambient(config.path, t),
            spec: problem.spec,
        };
        newton_solve(&op, problem.boundary, &PathRhs { problem, config, t }, from, &config.newton)
    };
    let label = config.path.label();
    let mut steps = Vec::new();
    let failure = |t: f64, last_t: f64, step: f64, e: &Error| FailureRecord {
        phase: label.to_string(),
        t,
        last_t,
        step,
        reason: e.to_string(),
    };

    let (mut field, rec) = match solve_at(0.0, start) {
        Ok(x) => x,
        Err(e @ (Error::NonConvergence { .. } | Error::LinearSolve(_))) => {
            return Ok(ContinuationOutcome {
                field: start.clone(),
                t_reached: 0.0,
                success: false,
                steps,
                failure: Some(failure(0.0, 0.0, 0.0, &e)),
            })
        }
        Err(e) => return Err(e),
    };
    steps.push(record_step(problem, config, 0.0, 0.0, &field, &rec)?);

    let mut t = 0.0;
    let mut dt = config.initial_step;
    let mut easy = 0;
    while t < 1.0 {
        let t_next = if t + dt >= 1.0 - 1e-12 { 1.0 } else { t + dt };
        match solve_at(t_next, &field) {
            Ok((next, rec)) => {
                let record = record_step(problem, config, t_next, t_next - t, &next, &rec)?;
                if !record.comparison_ok {
                    log::warn!(
                        "{label}: comparison v >= v_sub fails by {:e} at t = {t_next}",
                        -record.comparison_margin
                    );
                }
                log::info!(
                    "{label}: t = {t_next:.6}, {} newton iterations, residual {:e}",
                    rec.iterations,
                    rec.final_residual
                );
                steps.push(record);
                field = next;
                t = t_next;
                if rec.iterations <= config.easy_iterations {
                    easy += 1;
                    if easy >= 2 {
                        dt = (2.0 * dt).min(config.max_step);
                        easy = 0;
                    }
                } else {
                    easy = 0;
                }
            }
            Err(e) if matches!(e, Error::NonConvergence { .. } | Error::LinearSolve(_)) || e.is_cone_violation() || matches!(e, Error::Domain { .. }) => {
                log::debug!("{label}: step to t = {t_next} rejected: {e}");
                dt *= 0.5;
                easy = 0;
                if dt < config.min_step {
                    return Ok(ContinuationOutcome {
                        field,
                        t_reached: t,
                        success: false,
                        steps,
                        failure: Some(failure(t_next, t, dt, &e)),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ContinuationOutcome { field, t_reached: 1.0, success: true, steps, failure: None })
}

/// Which part of the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSelection {
    /// Auxiliary then main path for K ∈ {0, −1}; for K = 1 the Euclidean
    /// auxiliary path, the spherical path and the ε-removal path.
    Auto,
    /// Auxiliary path only (K ∈ {0, −1}).
    #[serde(alias = "68")]
    Auxiliary,
    /// Main path only, started from the subsolution (K ∈ {0, −1}).
    #[serde(alias = "69")]
    Main,
    /// Euclidean auxiliary path then the spherical path, ending at
    /// G = ψ − ε (K = 1).
    #[serde(alias = "71")]
    Spherical,
}

/// Overrides of the default path parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct PipelineSettings {
    pub path: PathSelection,
    pub epsilon: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub t_exponent: Option<u32>,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub newton: NewtonOptions,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        let c = HomotopyConfig::new(PathKind::Main, 1.0);
        Self {
            path: PathSelection::Auto,
            epsilon: None,
            delta1: None,
            delta2: None,
            t_exponent: None,
            initial_step: c.initial_step,
            min_step: c.min_step,
            max_step: c.max_step,
            newton: c.newton,
        }
    }
}

impl PipelineSettings {
    fn config(&self, path: PathKind, epsilon: f64) -> HomotopyConfig {
        HomotopyConfig {
            initial_step: self.initial_step,
            min_step: self.min_step,
            max_step: self.max_step,
            newton: self.newton,
            ..HomotopyConfig::new(path, epsilon)
        }
    }
}

/// The Dirichlet problem G[u] = ψ(z, u), u = boundary data on ∂Ω.
pub struct Problem<'a> {
    pub domain: &'a PolarDomain,
    pub model: SpaceForm,
    pub spec: &'a CurvatureFunction,
    pub psi: &'a dyn Psi,
    pub boundary: &'a DiscreteField,
    pub subsolution: &'a Subsolution,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub field: DiscreteField,
    pub success: bool,
    pub report: SolveReport,
    pub subsolution: SubsolutionReport,
}

/// Relative tolerance for the subsolution matching the boundary data.
pub const BOUNDARY_MATCH_TOLERANCE: f64 = 1e-12;

fn check_preconditions(problem: &Problem) -> Result<SubsolutionReport> {
    let d = problem.domain;
    if problem.spec.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "the solver works with surfaces (n = 2), curvature function has n = {}",
            problem.spec.dim()
        )));
    }
    for i in d.boundary() {
        let (a, b) = (problem.subsolution.field.values[i], problem.boundary.values[i]);
        if !((a - b).abs() <= BOUNDARY_MATCH_TOLERANCE * (1.0 + b.abs())) {
            return Err(Error::Precondition(format!(
                "subsolution differs from the boundary data at boundary node {i}: {a} vs {b}"
            )));
        }
    }
    for i in 0..d.len() {
        problem.model.check_u(problem.subsolution.field.u(d, i))?;
    }
    let report = verify_subsolution(d, problem.model.into(), problem.spec, problem.psi, problem.subsolution);
    if !report.verdict {
        return Err(Error::Precondition(format!(
            "subsolution check failed: {}",
            report.note.clone().unwrap_or_default()
        )));
    }
    Ok(report)
}

/// Runs the selected pipeline and collects a report. Errors are
/// validation failures; a stalled continuation yields `success = false`.
pub fn solve(problem: &Problem, settings: &PipelineSettings) -> Result<SolveOutcome> {
    let sub_report = check_preconditions(problem)?;
    let d = problem.domain;
    let k = problem.model.curvature_sign();
    let sub = problem.subsolution;
    let mut params = Parameters::default();
    let mut report_steps = Vec::new();
    let mut field = sub.field.clone();
    let mut failure = None;
    let mut final_ambient = Ambient::Model(problem.model);

    let discrete_g = |ambient: Ambient| {
        DiscreteOperator { domain: d, ambient, spec: problem.spec }.operator_values(&sub.field)
    };
    let mut run = |path: &PathProblem, config: HomotopyConfig, start: &DiscreteField| -> Result<Option<DiscreteField>> {
        let out = continuation_run(path, &config, start)?;
        report_steps.extend(out.steps);
        if out.success {
            Ok(Some(out.field))
        } else {
            failure = out.failure;
            Ok(None)
        }
    };

    let selection = settings.path;
    match (k, selection) {
        (0 | -1, PathSelection::Auto | PathSelection::Auxiliary | PathSelection::Main) => {
            let psi_lower = discrete_g(problem.model.into())?;
            let eps = match settings.epsilon {
                Some(e) => e,
                None => {
                    let mut m = f64::INFINITY;
                    for i in d.interior() {
                        let (xi, _) = problem.model.xi_of_u(sub.field.u(d, i))?;
                        m = m.min(psi_lower[i] / xi);
                    }
                    0.5 * m
                }
            };
            params.epsilon = Some(eps);
            let path = PathProblem {
                domain: d,
                model: problem.model,
                spec: problem.spec,
                psi: problem.psi,
                boundary: problem.boundary,
                subsolution: sub,
                psi_lower: &psi_lower,
            };
            let mut ok = true;
            if selection != PathSelection::Main {
                match run(&path, settings.config(PathKind::Auxiliary, eps), &field)? {
                    Some(f) => field = f,
                    None => ok = false,
                }
            }
            if ok && selection != PathSelection::Auxiliary {
                if let Some(f) = run(&path, settings.config(PathKind::Main, eps), &field)? {
                    field = f;
                }
            }
        }
        (1, PathSelection::Auto | PathSelection::Spherical) => {
            let euclid = SpaceForm::new(0)?;
            let g0 = sub.operator_values(d, Ambient::Deformed(0.0), problem.spec)?;
            let (mut g0_min, mut psi_min, mut psi_max, mut u_max) =
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for i in d.interior() {
                let (p, _) = problem.psi.eval(d.node(i), sub.field.u(d, i))?;
                g0_min = g0_min.min(g0[i]);
                psi_min = psi_min.min(p);
                psi_max = psi_max.max(p);
            }
            for i in 0..d.len() {
                u_max = u_max.max(sub.field.u(d, i));
            }
            let eps = settings.epsilon.unwrap_or(0.5 * g0_min.min(psi_min));
            let delta1 = settings.delta1.unwrap_or(0.05);
            let delta2 = settings.delta2.unwrap_or(0.25 * eps / (u_max * u_max));
            let p = match settings.t_exponent {
                Some(p) => p,
                None => (1..=MAX_T_EXPONENT)
                    .find(|&p| g0_min > 2.0 * (1.0 - delta1).powi(p as i32) * psi_max)
                    .ok_or_else(|| {
                        Error::Precondition(format!(
                            "no exponent p <= {MAX_T_EXPONENT} satisfies min G0[u_sub] > 2 T(1-delta1) max psi"
                        ))
                    })?,
            };
            params.epsilon = Some(eps);
            params.delta1 = Some(delta1);
            params.delta2 = Some(delta2);
            params.t_exponent = Some(p);
            params.auxiliary_epsilon = Some(delta2);

            // Euclidean auxiliary path ending at G⁰[u] = δ₂ u², the t = 0
            // problem of the spherical path.
            let psi_lower0 = discrete_g(euclid.into())?;
            let aux = PathProblem {
                domain: d,
                model: euclid,
                spec: problem.spec,
                psi: problem.psi,
                boundary: problem.boundary,
                subsolution: sub,
                psi_lower: &psi_lower0,
            };
            let sph = PathProblem { model: problem.model, ..aux };
            let sph = PathProblem { psi_lower: &psi_lower0, ..sph };
            let mut cfg = settings.config(PathKind::Spherical, eps);
            cfg.delta1 = delta1;
            cfg.delta2 = delta2;
            cfg.t_exponent = p;
            // Validate up front so a bad configuration is reported before any work.
            validate_config(&sph, &cfg)?;

            'pipeline: {
                let Some(f) = run(&aux, settings.config(PathKind::Auxiliary, delta2), &field)? else {
                    final_ambient = Ambient::Model(euclid);
                    break 'pipeline;
                };
                field = f;
                let Some(f) = run(&sph, cfg, &field)? else {
                    final_ambient = Ambient::Deformed(report_steps.last().map_or(0.0, |s: &StepRecord| s.t));
                    break 'pipeline;
                };
                field = f;
                if selection == PathSelection::Auto {
                    if let Some(f) = run(&sph, settings.config(PathKind::EpsilonRemoval, eps), &field)? {
                        field = f;
                    }
                }
            }
        }
        (_, sel) => {
            return Err(Error::Unsupported {
                curvature_sign: k,
                what: match sel {
                    PathSelection::Spherical => "the spherical path needs K = 1",
                    _ => "the auxiliary and main paths need K = 0 or K = -1; use auto or the spherical path",
                },
            })
        }
    }

    let success = failure.is_none();
    let monitors = estimate_monitors(d, &field, final_ambient).ok();
    let final_residual = report_steps.last().map_or(f64::NAN, |s| s.residual);
    let report = SolveReport {
        model: k,
        parameters: params,
        steps: report_steps,
        failure,
        success,
        final_residual,
        monitors,
        subsolution: sub_report.clone(),
    };
    Ok(SolveOutcome { field, success, report, subsolution: sub_report })
}
