//! Vectoring-angle planning.
//!
//! For a joint configuration `q` the planner searches the vectoring angles
//! `psi` that maximize
//!
//! ```text
//! w1 * tau_min(q, psi) + w2 / |lambda_s(q, psi)| + w3 / var(lambda_s(q, psi))
//! ```
//!
//! while keeping the CoG-frame roll and pitch `alpha_x`, `alpha_y` inside
//! `[alpha_min, alpha_max]` so the link plane stays nearly level in hover.
//! The first form of a deformation is solved globally (multi-start); later
//! forms are warm-started and restricted to `|psi - psi_prev| <= delta_psi`
//! so the vectoring servos move continuously.

use crate::allocation::{analyze, AllocationError};
use crate::feasibility::{tau_min_value, TorqueBasis};
use crate::geometry::{angle_diff, wrap_angle};
use crate::model::{check_joint_limits, Configuration, ModelError, RobotModel};
use crate::optim::{minimize, Termination, TrustRegionOptions};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// A corner case needs the dual torque below this share of the primal one.
pub const CORNER_DUAL_RATIO: f64 = 0.05;
/// Primal torque (N·m) a form must exceed before it can be a corner case.
pub const CORNER_TAU_FLOOR: f64 = 1e-3;
/// Trace warning when `tau_min` drops below this share of its initial value.
pub const COLLAPSE_RATIO: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(
        "no vectoring angles satisfy the attitude constraints (violation {max_violation:.3e})"
    )]
    Infeasible { max_violation: f64 },
    #[error("optimizer hit its evaluation cap without satisfying the constraints")]
    OptimizerStalled,
    #[error("plan break at t = {t:.3} s, q = {q:?}")]
    PlanBreak { t: f64, q: Vec<f64> },
    #[error("schedule is not time-ordered at index {0}")]
    UnorderedSchedule(usize),
    #[error("tilt design infeasible: {0}")]
    InfeasibleDesign(String),
    #[error("invalid design input: {0}")]
    InvalidDesignInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanWeights {
    /// Rotational controllability (`tau_min`).
    pub w1: f64,
    /// Energy efficiency (`1 / |lambda_s|`).
    pub w2: f64,
    /// Control margin (`1 / var(lambda_s)`).
    pub w3: f64,
    /// Lower clamp on the thrust variance, N².
    pub variance_floor: f64,
}

impl Default for PlanWeights {
    fn default() -> Self {
        PlanWeights {
            w1: 1.0,
            w2: 2.0,
            w3: 0.01,
            variance_floor: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanConstraints {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Largest per-step change of any vectoring angle, rad.
    pub delta_psi: f64,
    /// Constraint violation still accepted at return, rad.
    pub tolerance: f64,
    /// Objective evaluations allowed per local solve.
    pub max_iterations: usize,
}

impl Default for PlanConstraints {
    fn default() -> Self {
        PlanConstraints {
            alpha_min: -0.01,
            alpha_max: 0.01,
            delta_psi: 0.2,
            tolerance: 1e-4,
            max_iterations: 3000,
        }
    }
}

/// Objective terms of one form.
#[derive(Debug, Clone, PartialEq)]
pub struct FormEvaluation {
    pub objective: f64,
    pub tau_min: f64,
    pub lambda_s: Vec<f64>,
    pub alpha: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    /// Optimal vectoring angles wrapped to (-pi, pi].
    pub psi_bar: Vec<f64>,
    pub objective: f64,
    pub tau_min: f64,
    pub lambda_s: Vec<f64>,
    pub alpha: [f64; 2],
    pub feasible: bool,
    /// Objective evaluations spent.
    pub iterations: usize,
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Evaluates the planning objective at `(q, psi)`.
pub fn evaluate_form(
    model: &RobotModel,
    q: &[f64],
    psi: &[f64],
    weights: &PlanWeights,
) -> Result<FormEvaluation, AllocationError> {
    let hover = analyze(model, &Configuration::new(q.to_vec(), psi.to_vec()))?;
    let tau = tau_min_value(&TorqueBasis::from_columns(
        &hover.basis.torque,
        model.lambda_max,
    ));
    let lambda_s: Vec<f64> = hover.bundle.lambda_s.iter().copied().collect();
    let norm = lambda_s.iter().map(|l| l * l).sum::<f64>().sqrt();
    let var = variance(&lambda_s).max(weights.variance_floor);
    Ok(FormEvaluation {
        objective: weights.w1 * tau + weights.w2 / norm + weights.w3 / var,
        tau_min: tau,
        alpha: [hover.bundle.alpha_x, hover.bundle.alpha_y],
        lambda_s,
    })
}

/// Constraint values (feasible when all are >= 0): four attitude bounds,
/// then one positivity margin per rotor (static thrust over weight).
fn constraint_values(eval: &FormEvaluation, c: &PlanConstraints, weight: f64, out: &mut [f64]) {
    out[0] = eval.alpha[0] - c.alpha_min;
    out[1] = c.alpha_max - eval.alpha[0];
    out[2] = eval.alpha[1] - c.alpha_min;
    out[3] = c.alpha_max - eval.alpha[1];
    for (o, l) in out[4..].iter_mut().zip(&eval.lambda_s) {
        *o = l / weight;
    }
}

struct LocalSolve {
    psi: Vec<f64>,
    eval: Option<FormEvaluation>,
    feasible: bool,
    max_violation: f64,
    evaluations: usize,
    stalled: bool,
}

fn local_solve(
    model: &RobotModel,
    q: &[f64],
    weights: &PlanWeights,
    constraints: &PlanConstraints,
    start: &[f64],
    half_width: f64,
) -> LocalSolve {
    let n = model.n_links;
    let weight = model.total_mass() * model.gravity;
    let lower: Vec<f64> = start.iter().map(|s| s - half_width).collect();
    let upper: Vec<f64> = start.iter().map(|s| s + half_width).collect();
    let options = TrustRegionOptions {
        rho_begin: 0.5,
        rho_end: 1e-4,
        max_evaluations: constraints.max_iterations,
        constraint_tolerance: constraints.tolerance,
    };
    let result = minimize(
        |psi, c| match evaluate_form(model, q, psi, weights) {
            Ok(e) => {
                constraint_values(&e, constraints, weight, c);
                -e.objective
            }
            Err(_) => {
                c.fill(-1.0);
                1e6
            }
        },
        4 + n,
        start,
        &lower,
        &upper,
        &options,
    );
    let eval = evaluate_form(model, q, &result.x, weights).ok();
    LocalSolve {
        psi: result.x,
        eval,
        feasible: result.feasible,
        max_violation: result.max_violation,
        evaluations: result.evaluations,
        stalled: result.termination == Termination::MaxEvaluations,
    }
}

/// Multi-start lattice: every vectoring angle at -pi/2 or +pi/2.
fn lattice_seeds(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        FRAC_PI_2
                    } else {
                        -FRAC_PI_2
                    }
                })
                .collect()
        })
        .collect()
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn inf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| angle_diff(*x, *y).abs())
        .fold(0.0, f64::max)
}

/// True when candidate `a` should replace incumbent `b`.
fn better(a: &LocalSolve, b: &LocalSolve, reference: Option<&[f64]>) -> bool {
    let (Some(ea), Some(eb)) = (&a.eval, &b.eval) else {
        return a.eval.is_some();
    };
    let tol = 1e-9 * (1.0 + eb.objective.abs());
    if ea.objective > eb.objective + tol {
        return true;
    }
    if ea.objective < eb.objective - tol {
        return false;
    }
    if let Some(r) = reference {
        let (da, db) = (inf_distance(&a.psi, r), inf_distance(&b.psi, r));
        if (da - db).abs() > 1e-12 {
            return da < db;
        }
    }
    let wa: Vec<f64> = a.psi.iter().copied().map(wrap_angle).collect();
    let wb: Vec<f64> = b.psi.iter().copied().map(wrap_angle).collect();
    lexicographic(&wa, &wb).is_lt()
}

fn finish(best: LocalSolve, evaluations: usize) -> PlanResult {
    let eval = best.eval.expect("feasible solve carries an evaluation");
    PlanResult {
        psi_bar: best.psi.iter().copied().map(wrap_angle).collect(),
        objective: eval.objective,
        tau_min: eval.tau_min,
        lambda_s: eval.lambda_s,
        alpha: eval.alpha,
        feasible: true,
        iterations: evaluations,
    }
}

/// Repeats warm-start solves from the wrapped incumbent until one returns
/// its start unchanged, so a later warm start at the same `q` is stationary.
fn polish(
    model: &RobotModel,
    q: &[f64],
    weights: &PlanWeights,
    constraints: &PlanConstraints,
    mut best: LocalSolve,
) -> (LocalSolve, usize) {
    let mut evaluations = 0;
    for _ in 0..20 {
        let start: Vec<f64> = best.psi.iter().copied().map(wrap_angle).collect();
        let mut s = local_solve(
            model,
            q,
            weights,
            constraints,
            &start,
            constraints.delta_psi,
        );
        evaluations += s.evaluations;
        s.psi = s.psi.into_iter().map(wrap_angle).collect();
        let same = s.psi == start;
        if !s.feasible || s.eval.is_none() {
            break;
        }
        best = s;
        if same {
            break;
        }
    }
    (best, evaluations)
}

/// Optimal vectoring angles for joint angles `q`.
///
/// Without `warm_start` a global multi-start search is run over the whole
/// circle; with it, a single local solve inside `warm_start +- delta_psi`.
pub fn optimize_vectoring(
    model: &RobotModel,
    q: &[f64],
    weights: &PlanWeights,
    constraints: &PlanConstraints,
    warm_start: Option<&[f64]>,
) -> Result<PlanResult, PlanError> {
    model.validate()?;
    if q.len() != model.n_joints() {
        return Err(ModelError::DimensionMismatch {
            what: "q",
            expected: model.n_joints(),
            actual: q.len(),
        }
        .into());
    }
    check_joint_limits(q)?;

    let mut evaluations = 0;
    let mut candidates = Vec::new();
    match warm_start {
        Some(prev) => {
            if prev.len() != model.n_links {
                return Err(ModelError::DimensionMismatch {
                    what: "warm_start",
                    expected: model.n_links,
                    actual: prev.len(),
                }
                .into());
            }
            let s = local_solve(model, q, weights, constraints, prev, constraints.delta_psi);
            evaluations += s.evaluations;
            candidates.push(s);
        }
        None => {
            for seed in lattice_seeds(model.n_links) {
                let s = local_solve(model, q, weights, constraints, &seed, PI);
                evaluations += s.evaluations;
                candidates.push(s);
            }
            let best_feasible =
                candidates
                    .iter()
                    .filter(|c| c.feasible)
                    .fold(None::<&LocalSolve>, |acc, c| match acc {
                        Some(b) if !better(c, b, None) => Some(b),
                        _ => Some(c),
                    });
            if let Some(b) = best_feasible {
                let dual = dual_solution(&b.psi);
                let s = local_solve(model, q, weights, constraints, &dual, PI);
                evaluations += s.evaluations;
                candidates.push(s);
            }
        }
    }

    let stalled = candidates.iter().any(|c| c.stalled);
    let least_violation = candidates
        .iter()
        .map(|c| c.max_violation)
        .fold(f64::INFINITY, f64::min);
    let mut best: Option<LocalSolve> = None;
    for c in candidates
        .into_iter()
        .filter(|c| c.feasible && c.eval.is_some())
    {
        if best.as_ref().is_none_or(|b| better(&c, b, warm_start)) {
            best = Some(c);
        }
    }
    if warm_start.is_none() {
        if let Some(b) = best.take() {
            let (b, extra) = polish(model, q, weights, constraints, b);
            evaluations += extra;
            best = Some(b);
        }
    }
    match best {
        Some(b) => Ok(finish(b, evaluations)),
        None if stalled => Err(PlanError::OptimizerStalled),
        None => Err(PlanError::Infeasible {
            max_violation: least_violation,
        }),
    }
}

/// Reversed vectoring directions `psi_i + pi`, wrapped to (-pi, pi].
pub fn dual_solution(psi_bar: &[f64]) -> Vec<f64> {
    psi_bar.iter().map(|p| wrap_angle(p + PI)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerCase {
    pub is_corner: bool,
    pub tau_primal: f64,
    pub tau_dual: f64,
    pub psi_primal: Vec<f64>,
    pub psi_dual: Vec<f64>,
}

/// Checks whether the dual of the optimal vectoring angles loses
/// controllability at `q`.
pub fn detect_corner_case(
    model: &RobotModel,
    q: &[f64],
    weights: &PlanWeights,
    constraints: &PlanConstraints,
) -> Result<CornerCase, PlanError> {
    let primal = optimize_vectoring(model, q, weights, constraints, None)?;
    let psi_dual = dual_solution(&primal.psi_bar);
    let hover = analyze(model, &Configuration::new(q.to_vec(), psi_dual.clone()));
    let tau_dual = hover
        .map(|h| {
            tau_min_value(&TorqueBasis::from_columns(
                &h.basis.torque,
                model.lambda_max,
            ))
        })
        .unwrap_or(0.0);
    Ok(CornerCase {
        is_corner: primal.tau_min > CORNER_TAU_FLOOR
            && tau_dual < CORNER_DUAL_RATIO * primal.tau_min,
        tau_primal: primal.tau_min,
        tau_dual,
        psi_primal: primal.psi_bar,
        psi_dual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanStep {
    pub t: f64,
    pub q: Vec<f64>,
    pub result: PlanResult,
    pub warm_started: bool,
    /// Some attitude bound is active at the solution.
    pub alpha_active: bool,
    /// Some vectoring angle sits on its continuity bound.
    pub continuity_active: bool,
}

/// `tau_min` dropped below `COLLAPSE_RATIO` of the globally optimal value at
/// the first form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseWarning {
    pub t: f64,
    pub q: Vec<f64>,
    pub tau_min: f64,
}

/// Which of the two initial solutions a trace continues from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Branch {
    #[default]
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct PlanTrace {
    pub steps: Vec<PlanStep>,
    pub warnings: Vec<CollapseWarning>,
    pub branch: Branch,
}

impl PlanTrace {
    /// Largest per-step change of any vectoring angle along the trace.
    pub fn max_psi_step(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| inf_distance(&w[1].result.psi_bar, &w[0].result.psi_bar))
            .fold(0.0, f64::max)
    }

    pub fn min_tau(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.result.tau_min)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Local solve from `start` inside `start +- delta_psi`, repeated until
/// stationary. Used to follow the dual of an initial solution.
pub fn refine_from(
    model: &RobotModel,
    q: &[f64],
    weights: &PlanWeights,
    constraints: &PlanConstraints,
    start: &[f64],
) -> Result<PlanResult, PlanError> {
    let first = local_solve(model, q, weights, constraints, start, constraints.delta_psi);
    if !first.feasible || first.eval.is_none() {
        return Err(PlanError::Infeasible {
            max_violation: first.max_violation,
        });
    }
    let evaluations = first.evaluations;
    let (best, extra) = polish(model, q, weights, constraints, first);
    Ok(finish(best, evaluations + extra))
}

fn as_break(e: PlanError, t: f64, q: &[f64]) -> PlanError {
    match e {
        PlanError::Infeasible { .. } | PlanError::OptimizerStalled => {
            PlanError::PlanBreak { t, q: q.to_vec() }
        }
        other => other,
    }
}

/// Plans vectoring angles along a time-ordered joint schedule.
///
/// The first form is solved globally; both that solution and its dual are
/// then followed with warm-started, continuity-bounded solves. The branch
/// that completes with the larger minimum `tau_min` is returned (the primal
/// on ties), since only one of the two may connect continuously to later
/// forms.
pub fn plan_deformation(
    model: &RobotModel,
    joint_schedule: &[(f64, Vec<f64>)],
    weights: &PlanWeights,
    constraints: &PlanConstraints,
) -> Result<PlanTrace, PlanError> {
    match plan_deformation_partial(model, joint_schedule, weights, constraints)? {
        (trace, None) => Ok(trace),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`plan_deformation`] but keeps the trace computed before a
/// [`PlanError::PlanBreak`]. Errors at the first form are returned directly.
pub fn plan_deformation_partial(
    model: &RobotModel,
    joint_schedule: &[(f64, Vec<f64>)],
    weights: &PlanWeights,
    constraints: &PlanConstraints,
) -> Result<(PlanTrace, Option<PlanError>), PlanError> {
    for (i, w) in joint_schedule.windows(2).enumerate() {
        if !(w[1].0 >= w[0].0) {
            return Err(PlanError::UnorderedSchedule(i + 1));
        }
    }
    let Some((t0, q0)) = joint_schedule.first() else {
        return Ok((PlanTrace::default(), None));
    };
    let initial = optimize_vectoring(model, q0, weights, constraints, None)
        .map_err(|e| as_break(e, *t0, q0))?;
    let follow = |first: PlanResult, branch: Branch| {
        let mut p = DeformationPlanner::new(model.clone(), *weights, *constraints);
        p.reference_tau = Some(initial.tau_min);
        p.trace.branch = branch;
        p.push(*t0, q0, first, None);
        let err = joint_schedule[1..]
            .iter()
            .find_map(|(t, q)| p.step(*t, q).err());
        (p.into_trace(), err)
    };
    let primal = follow(initial.clone(), Branch::Primal);
    let dual = refine_from(
        model,
        q0,
        weights,
        constraints,
        &dual_solution(&initial.psi_bar),
    )
    .ok()
    .map(|d| follow(d, Branch::Dual));
    let Some(dual) = dual else {
        return Ok(primal);
    };
    let score = |(trace, err): &(PlanTrace, Option<PlanError>)| {
        (err.is_none(), trace.steps.len(), trace.min_tau())
    };
    let (sp, sd) = (score(&primal), score(&dual));
    let dual_wins = match (sp.0, sd.0) {
        (false, true) => true,
        (true, false) => false,
        (false, false) if sp.1 != sd.1 => sd.1 > sp.1,
        _ => sd.2 > sp.2 + 1e-9,
    };
    let chosen = if dual_wins { dual } else { primal };
    for w in &chosen.0.warnings {
        log::warn!(
            "tau_min collapsed to {:.4} N·m at t = {:.3} s",
            w.tau_min,
            w.t
        );
    }
    Ok(chosen)
}

/// Incremental deformation planning: the first step is a global solve (or
/// a supplied initial solution), later steps are warm-started.
#[derive(Debug, Clone)]
pub struct DeformationPlanner {
    model: RobotModel,
    weights: PlanWeights,
    constraints: PlanConstraints,
    trace: PlanTrace,
    /// Collapse warnings are relative to this; defaults to the first step.
    reference_tau: Option<f64>,
}

impl DeformationPlanner {
    pub fn new(model: RobotModel, weights: PlanWeights, constraints: PlanConstraints) -> Self {
        DeformationPlanner {
            model,
            weights,
            constraints,
            trace: PlanTrace::default(),
            reference_tau: None,
        }
    }

    /// Starts from an already solved first form.
    pub fn with_initial(
        model: RobotModel,
        weights: PlanWeights,
        constraints: PlanConstraints,
        t: f64,
        q: &[f64],
        first: PlanResult,
    ) -> Self {
        let mut p = Self::new(model, weights, constraints);
        p.push(t, q, first, None);
        p
    }

    pub fn last(&self) -> Option<&PlanStep> {
        self.trace.steps.last()
    }

    pub fn trace(&self) -> &PlanTrace {
        &self.trace
    }

    pub fn into_trace(self) -> PlanTrace {
        self.trace
    }

    pub fn step(&mut self, t: f64, q: &[f64]) -> Result<&PlanStep, PlanError> {
        let prev = self.trace.steps.last().map(|s| s.result.psi_bar.clone());
        let result = optimize_vectoring(
            &self.model,
            q,
            &self.weights,
            &self.constraints,
            prev.as_deref(),
        )
        .map_err(|e| as_break(e, t, q))?;
        self.push(t, q, result, prev);
        Ok(self.trace.steps.last().expect("just pushed"))
    }

    fn push(&mut self, t: f64, q: &[f64], result: PlanResult, prev: Option<Vec<f64>>) {
        let c = &self.constraints;
        let margin = 10.0 * c.tolerance;
        let alpha_active = result
            .alpha
            .iter()
            .any(|a| (a - c.alpha_min).abs() < margin || (c.alpha_max - a).abs() < margin);
        let continuity_active = prev
            .as_ref()
            .is_some_and(|p| inf_distance(&result.psi_bar, p) > c.delta_psi - 1e-6);
        let reference = self
            .reference_tau
            .or(self.trace.steps.first().map(|s| s.result.tau_min));
        if let Some(reference) = reference {
            if result.tau_min < COLLAPSE_RATIO * reference {
                log::debug!(
                    "tau_min collapsed to {:.4} N·m at t = {t:.3} s",
                    result.tau_min
                );
                self.trace.warnings.push(CollapseWarning {
                    t,
                    q: q.to_vec(),
                    tau_min: result.tau_min,
                });
            }
        }
        self.trace.steps.push(PlanStep {
            t,
            q: q.to_vec(),
            warm_started: prev.is_some(),
            result,
            alpha_active,
            continuity_active,
        });
    }
}

/// Smallest tilt satisfying the thrust-overhead bound `1/cos(beta) <= gamma1`
/// and the line-form torque ratio `4 sin(beta) d / l >= gamma2`.
pub fn design_tilt_angle(
    gamma1: f64,
    gamma2: f64,
    link_length: f64,
    cog_to_propeller: f64,
) -> Result<f64, PlanError> {
    if !(gamma1 >= 1.0) {
        return Err(PlanError::InvalidDesignInput(format!(
            "gamma1 = {gamma1} must be >= 1"
        )));
    }
    if !(gamma2 >= 0.0) || !(link_length > 0.0) || !(cog_to_propeller > 0.0) {
        return Err(PlanError::InvalidDesignInput(
            "gamma2 must be non-negative, l and d positive".into(),
        ));
    }
    let arg = gamma2 * link_length / (4.0 * cog_to_propeller);
    if arg > 1.0 {
        return Err(PlanError::InfeasibleDesign(format!(
            "torque ratio needs sin(beta) = {arg:.4} > 1"
        )));
    }
    let beta = arg.asin();
    let beta_max = (1.0 / gamma1).acos();
    if beta > beta_max {
        return Err(PlanError::InfeasibleDesign(format!(
            "torque bound beta >= {beta:.4} conflicts with thrust bound beta <= {beta_max:.4}"
        )));
    }
    Ok(beta)
}

/// Rescales `lambda_max` until the optimized form `q` reaches `target_tau`.
///
/// `tau_min` is linear in `lambda_max` for fixed angles; the fixed-point
/// iteration accounts for the optimum shifting with the rescaled objective.
pub fn calibrate_lambda_max(
    model: &RobotModel,
    q: &[f64],
    target_tau: f64,
    weights: &PlanWeights,
    constraints: &PlanConstraints,
) -> Result<(f64, PlanResult), PlanError> {
    let mut m = model.clone();
    let mut last = optimize_vectoring(&m, q, weights, constraints, None)?;
    for _ in 0..8 {
        if (last.tau_min - target_tau).abs() < 1e-4 * target_tau || last.tau_min <= 0.0 {
            break;
        }
        m.lambda_max *= target_tau / last.tau_min;
        last = optimize_vectoring(&m, q, weights, constraints, None)?;
    }
    Ok((m.lambda_max, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tilt_design_closed_form() {
        let b = design_tilt_angle(1.05, 0.2, 0.6, 0.1).unwrap();
        assert_relative_eq!(b, 0.3f64.asin(), epsilon = 1e-12);
        assert!(design_tilt_angle(1.05, 1e-9, 0.6, 0.1).unwrap() < 1e-8);
        assert!(matches!(
            design_tilt_angle(1.0001, 0.5, 0.6, 0.1),
            Err(PlanError::InfeasibleDesign(_))
        ));
        assert!(matches!(
            design_tilt_angle(1.5, 2.0, 0.6, 0.1),
            Err(PlanError::InfeasibleDesign(_))
        ));
        assert!(matches!(
            design_tilt_angle(0.9, 0.2, 0.6, 0.1),
            Err(PlanError::InvalidDesignInput(_))
        ));
    }

    #[test]
    fn tilt_design_meets_both_constraints() {
        let b = design_tilt_angle(1.05, 0.2, 0.6, 0.1).unwrap();
        assert!(1.0 / b.cos() <= 1.05);
        assert_relative_eq!(4.0 * b.sin() * 0.1 / 0.6, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn dual_is_an_involution() {
        assert_eq!(dual_solution(&[0.0; 4]), vec![PI; 4]);
        let psi = [0.3, -2.9, 1.7, PI];
        let back = dual_solution(&dual_solution(&psi));
        for (a, b) in back.iter().zip(psi) {
            assert_relative_eq!(angle_diff(*a, b), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lattice_has_sixteen_quad_seeds() {
        let s = lattice_seeds(4);
        assert_eq!(s.len(), 16);
        assert!(s.iter().all(|v| v.iter().all(|x| x.abs() == FRAC_PI_2)));
    }

    #[test]
    fn unordered_schedule_rejected() {
        let m = RobotModel::default();
        let sched = vec![(1.0, vec![0.0; 3]), (0.5, vec![0.0; 3])];
        assert_eq!(
            plan_deformation(
                &m,
                &sched,
                &PlanWeights::default(),
                &PlanConstraints::default()
            ),
            Err(PlanError::UnorderedSchedule(1))
        );
    }

    #[test]
    fn variance_is_population() {
        assert_relative_eq!(variance(&[1.0, 2.0, 3.0, 4.0]), 1.25);
    }
}
