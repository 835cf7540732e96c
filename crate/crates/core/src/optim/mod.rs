//! Derivative-free constrained minimization by successive linear
//! approximation inside a trust region.
//!
//! Each iteration fits linear models of the objective and every constraint
//! from a coordinate simplex of size `rho` around the current point, then
//! takes the step that minimizes the model objective subject to the
//! linearized constraints within the box `|d|_inf <= rho` (an LP). Steps are
//! accepted on an `l_inf` exact-penalty merit function; the radius only
//! shrinks, so the method terminates once `rho < rho_end`.

pub mod lp;

use lp::LpOutcome;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionOptions {
    pub rho_begin: f64,
    pub rho_end: f64,
    pub max_evaluations: usize,
    /// Largest constraint violation regarded as feasible.
    pub constraint_tolerance: f64,
}

impl Default for TrustRegionOptions {
    fn default() -> Self {
        TrustRegionOptions {
            rho_begin: 0.5,
            rho_end: 1e-4,
            max_evaluations: 3000,
            constraint_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxEvaluations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `max(0, -min_j c_j(x))` at the returned point.
    pub max_violation: f64,
    pub feasible: bool,
    pub evaluations: usize,
    pub iterations: usize,
    pub termination: Termination,
}

struct Sample {
    x: Vec<f64>,
    f: f64,
    c: Vec<f64>,
    violation: f64,
}

struct Evaluator<F> {
    func: F,
    m: usize,
    count: usize,
    best_feasible: Option<Sample>,
    least_violating: Option<Sample>,
    tolerance: f64,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Evaluator<F> {
    fn eval(&mut self, x: Vec<f64>) -> Sample {
        let mut c = vec![0.0; self.m];
        let mut f = (self.func)(&x, &mut c);
        if !f.is_finite() {
            f = f64::MAX / 4.0;
        }
        for v in c.iter_mut() {
            if !v.is_finite() {
                *v = -1e30;
            }
        }
        self.count += 1;
        let violation = violation(&c);
        let s = Sample { x, f, c, violation };
        if s.violation <= self.tolerance && self.best_feasible.as_ref().is_none_or(|b| s.f < b.f) {
            self.best_feasible = Some(s.clone_sample());
        }
        if self
            .least_violating
            .as_ref()
            .is_none_or(|b| s.violation < b.violation || (s.violation == b.violation && s.f < b.f))
        {
            self.least_violating = Some(s.clone_sample());
        }
        s
    }
}

impl Sample {
    fn clone_sample(&self) -> Sample {
        Sample {
            x: self.x.clone(),
            f: self.f,
            c: self.c.clone(),
            violation: self.violation,
        }
    }
}

fn violation(c: &[f64]) -> f64 {
    c.iter().fold(0.0f64, |acc, v| acc.max(-v))
}

/// Minimizes `f(x)` subject to `c_j(x) >= 0` and `lower <= x <= upper`.
///
/// `func` writes the `n_constraints` constraint values into its second
/// argument and returns the objective. Fully deterministic.
pub fn minimize<F>(
    func: F,
    n_constraints: usize,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &TrustRegionOptions,
) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    let mut ev = Evaluator {
        func,
        m: n_constraints,
        count: 0,
        best_feasible: None,
        least_violating: None,
        tolerance: options.constraint_tolerance,
    };
    let min_width = lower
        .iter()
        .zip(upper)
        .map(|(l, u)| u - l)
        .fold(f64::INFINITY, f64::min);
    let mut rho = options.rho_begin.min(0.25 * min_width).max(options.rho_end);
    let mut mu = 0.0f64;
    let start: Vec<f64> = x0
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (l, u))| x.clamp(*l, *u))
        .collect();
    let mut current = ev.eval(start);
    let mut iterations = 0;
    let mut termination = Termination::Converged;

    while rho >= options.rho_end {
        if ev.count + n + 1 > options.max_evaluations {
            termination = Termination::MaxEvaluations;
            break;
        }
        iterations += 1;

        // linear models from a coordinate simplex
        let mut grad = vec![0.0; n];
        let mut jac = vec![vec![0.0; n]; n_constraints];
        for i in 0..n {
            let h = if current.x[i] + rho <= upper[i] {
                rho
            } else {
                -rho
            };
            let mut y = current.x.clone();
            y[i] += h;
            let s = ev.eval(y);
            grad[i] = (s.f - current.f) / h;
            for (row, (a, b)) in jac.iter_mut().zip(s.c.iter().zip(&current.c)) {
                row[i] = (a - b) / h;
            }
        }

        let Some(step) = trust_region_step(&current, &grad, &jac, lower, upper, rho) else {
            rho *= 0.5;
            continue;
        };
        let step_len = step.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        if step_len < 1e-3 * rho {
            rho *= 0.5;
            continue;
        }

        let lin_violation = (0..n_constraints)
            .map(|j| -(current.c[j] + dot(&jac[j], &step)))
            .fold(0.0f64, f64::max);
        let pred_f = -dot(&grad, &step);
        let pred_v = current.violation - lin_violation;
        if pred_v > 1e-12 && pred_f < 0.0 {
            mu = mu.max(1.5 * (-pred_f) / pred_v);
        }
        let pred = pred_f + mu * pred_v;

        let trial_x: Vec<f64> = current
            .x
            .iter()
            .zip(&step)
            .zip(lower.iter().zip(upper))
            .map(|((x, d), (l, u))| (x + d).clamp(*l, *u))
            .collect();
        let trial = ev.eval(trial_x);
        let merit = |s: &Sample| s.f + mu * s.violation;
        let actual = merit(&current) - merit(&trial);
        let accepted = pred > 0.0 && actual > 0.1 * pred;
        if accepted {
            current = trial;
        }
        if !accepted || step_len < 0.5 * rho {
            rho *= 0.5;
        }
    }

    let evaluations = ev.count;
    let best = match ev.best_feasible {
        Some(s) => s,
        None => ev.least_violating.expect("at least one evaluation"),
    };
    Minimum {
        feasible: best.violation <= options.constraint_tolerance,
        x: best.x,
        objective: best.f,
        max_violation: best.violation,
        evaluations,
        iterations,
        termination,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-stage LP step: first the least achievable linearized violation `t*`,
/// then the best model objective among steps that reach it.
fn trust_region_step(
    current: &Sample,
    grad: &[f64],
    jac: &[Vec<f64>],
    lower: &[f64],
    upper: &[f64],
    rho: f64,
) -> Option<Vec<f64>> {
    let n = grad.len();
    // d = e - shift, 0 <= e <= span
    let shift: Vec<f64> = (0..n)
        .map(|i| rho.min(current.x[i] - lower[i]).max(0.0))
        .collect();
    let span: Vec<f64> = (0..n)
        .map(|i| shift[i] + rho.min(upper[i] - current.x[i]).max(0.0))
        .collect();

    // constraint rows in terms of e: -(a_j . e) <= c_j - a_j . shift (+ t)
    let base: Vec<f64> = jac
        .iter()
        .zip(&current.c)
        .map(|(a, c)| c - dot(a, &shift))
        .collect();

    // stage 1: variables (e, t)
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (a, b) in jac.iter().zip(&base) {
        let mut row: Vec<f64> = a.iter().map(|v| -v).collect();
        row.push(-1.0);
        rows.push(row);
        rhs.push(*b);
    }
    for i in 0..n {
        let mut row = vec![0.0; n + 1];
        row[i] = 1.0;
        rows.push(row);
        rhs.push(span[i]);
    }
    let mut cost = vec![0.0; n + 1];
    cost[n] = 1.0;
    let t_star = match lp::solve(&cost, &rows, &rhs) {
        LpOutcome::Optimal { objective, .. } => objective.max(0.0),
        _ => return None,
    };

    // stage 2: variables e, violation capped at t*
    let slack = t_star + 1e-12 * (1.0 + t_star);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (a, b) in jac.iter().zip(&base) {
        rows.push(a.iter().map(|v| -v).collect::<Vec<_>>());
        rhs.push(b + slack);
    }
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        rows.push(row);
        rhs.push(span[i]);
    }
    match lp::solve(grad, &rows, &rhs) {
        LpOutcome::Optimal { x, .. } => Some(x.iter().zip(&shift).map(|(e, s)| e - s).collect()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unconstrained_quadratic() {
        let r = minimize(
            |x, _| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2),
            0,
            &[3.0, 2.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &TrustRegionOptions {
                rho_end: 1e-6,
                ..Default::default()
            },
        );
        assert!(r.feasible);
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(r.x[1], -0.5, epsilon = 1e-3);
    }

    #[test]
    fn respects_nonlinear_constraint() {
        // min x + y on the unit disc -> (-1/sqrt2, -1/sqrt2)
        let r = minimize(
            |x, c| {
                c[0] = 1.0 - x[0] * x[0] - x[1] * x[1];
                x[0] + x[1]
            },
            1,
            &[0.0, 0.0],
            &[-3.0, -3.0],
            &[3.0, 3.0],
            &TrustRegionOptions {
                rho_end: 1e-6,
                ..Default::default()
            },
        );
        assert!(r.feasible);
        assert_relative_eq!(r.objective, -2f64.sqrt(), epsilon = 1e-3);
    }

    #[test]
    fn respects_box() {
        let r = minimize(
            |x, _| -x[0] - x[1],
            0,
            &[0.0, 0.0],
            &[-1.0, -1.0],
            &[0.3, 0.7],
            &Default::default(),
        );
        assert_relative_eq!(r.x[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(r.x[1], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn reports_infeasible_problems() {
        let r = minimize(
            |x, c| {
                c[0] = -1.0 - x[0] * x[0];
                x[0]
            },
            1,
            &[0.5],
            &[-2.0],
            &[2.0],
            &Default::default(),
        );
        assert!(!r.feasible);
        assert_relative_eq!(r.max_violation, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn deterministic() {
        let run = || {
            minimize(
                |x, c| {
                    c[0] = x[0] - x[1] * x[1];
                    (x[0] - 2.0).abs() + x[1].sin()
                },
                1,
                &[0.1, 0.2],
                &[-3.0, -3.0],
                &[3.0, 3.0],
                &Default::default(),
            )
        };
        assert_eq!(run(), run());
    }
}
