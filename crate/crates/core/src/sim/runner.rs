//! Closed-loop scenario execution.

use super::dynamics::{dynamics_step, ExternalWrench, RigidBody, RigidBodyState};
use super::scenario::Scenario;
use super::telemetry::TelemetryRecord;
use super::SimError;
use crate::control::{CascadeController, ControllerConfig};
use crate::feasibility::{tau_min_value, TorqueBasis};
use crate::geometry::{angle_diff, orthonormalize, roll_pitch_yaw};
use crate::model::{Configuration, RobotModel};
use crate::planner::{
    plan_deformation_partial, PlanConstraints, PlanError, PlanTrace, PlanWeights,
};
use nalgebra::{DVector, Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Result of a run; `abort` holds the error that stopped it early, in which
/// case `telemetry` covers the ticks before the failure.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub telemetry: Vec<TelemetryRecord>,
    pub plan: PlanTrace,
    pub abort: Option<SimError>,
    pub gain_updates: usize,
    pub final_state: RigidBodyState,
}

impl SimRun {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }
}

/// Re-expresses the state in the CoG frame of a new form, keeping the root
/// link frame and the CoG trajectory continuous.
fn reanchor(state: &mut RigidBodyState, r_old: &Matrix3<f64>, r_new: &Matrix3<f64>) {
    let delta = orthonormalize(&(r_old * r_new.transpose()));
    state.attitude *=
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(delta));
    state.omega = r_new * r_old.transpose() * state.omega;
}

/// Vectoring command at `t`, interpolated between planner ticks so joints
/// and vectoring servos move together. Held after the last planned tick.
fn psi_at(plan: &PlanTrace, plan_dt: f64, t: f64) -> Vec<f64> {
    let steps = &plan.steps;
    let k = ((t / plan_dt).floor() as usize).min(steps.len() - 1);
    let a = &steps[k].result.psi_bar;
    match steps.get(k + 1) {
        Some(next) => {
            let s = ((t - steps[k].t) / (next.t - steps[k].t)).clamp(0.0, 1.0);
            a.iter()
                .zip(&next.result.psi_bar)
                .map(|(x, y)| x + angle_diff(*y, *x) * s)
                .collect()
        }
        None => a.clone(),
    }
}

/// Runs `scenario` with the cascade at `control_rate` and RK4 at
/// `integration_rate`. The known joint schedule is planned up front at
/// `planner_rate`; joints track the schedule kinematically (or through the
/// servo lag when enabled). A plan break aborts the run when it is reached.
pub fn run_scenario(
    model: &RobotModel,
    scenario: &Scenario,
    controller_config: &ControllerConfig,
    weights: &PlanWeights,
    constraints: &PlanConstraints,
) -> Result<SimRun, SimError> {
    model.validate()?;
    scenario.validate(model.n_joints())?;
    let dt = 1.0 / scenario.integration_rate;
    let k_control = scenario.control_divider()?;
    let k_plan = scenario.planner_divider()?;
    let control_dt = dt * k_control as f64;
    let n_steps = (scenario.duration * scenario.integration_rate).round() as usize;

    let plan_dt = dt * k_plan as f64;
    let grid = scenario.planner_grid();
    let reference0 = scenario.reference.at(0.0);
    let mut state = RigidBodyState::level(
        reference0.position + Vector3::from(scenario.initial_offset),
        reference0.yaw,
    );
    state.velocity = reference0.velocity;
    let mut run = SimRun {
        telemetry: Vec::new(),
        plan: PlanTrace::default(),
        abort: None,
        gain_updates: 0,
        final_state: state,
    };

    let mut plan_break = match plan_deformation_partial(model, &grid, weights, constraints) {
        Ok((trace, err)) => {
            run.plan = trace;
            err
        }
        Err(e) => {
            run.abort = Some(e.into());
            return Ok(run);
        }
    };
    let break_t = match &plan_break {
        Some(PlanError::PlanBreak { t, .. }) => *t,
        Some(_) => grid[run.plan.steps.len()].0,
        None => f64::INFINITY,
    };
    let mut q_act = scenario.joints_at(0.0);
    let mut psi_act = run.plan.steps[0].result.psi_bar.clone();
    let mut controller = match CascadeController::new(
        model.clone(),
        controller_config.clone(),
        &Configuration::new(q_act.clone(), psi_act.clone()),
        0.0,
    ) {
        Ok(c) => c,
        Err(e) => {
            run.abort = Some(e.into());
            return Ok(run);
        }
    };
    let mut body = RigidBody::from_hover(controller.hover(), model.gravity);
    let mut tau = tau_min_value(&TorqueBasis::from_columns(
        &controller.hover().basis.torque,
        model.lambda_max,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let noise =
        Normal::new(0.0, scenario.disturbance.force_noise_std.max(0.0)).expect("finite std");
    let mut wrench = ExternalWrench {
        force_body: Vector3::from(scenario.disturbance.force_body),
        torque_body: Vector3::from(scenario.disturbance.torque_body),
        force_world: Vector3::zeros(),
    };
    let lag = if scenario.servo_lag {
        1.0 - (-control_dt / scenario.servo_time_constant).exp()
    } else {
        1.0
    };
    let mut lambda = DVector::zeros(model.n_links);

    for i in 0..n_steps {
        let t = i as f64 * dt;
        if t >= break_t - 0.5 * dt {
            run.abort = plan_break.take().map(Into::into);
            break;
        }
        if i % k_control == 0 {
            let q_cmd = scenario.joints_at(t);
            for (a, c) in q_act.iter_mut().zip(&q_cmd) {
                *a += (c - *a) * lag;
            }
            let psi_cmd = psi_at(&run.plan, plan_dt, t);
            for (a, c) in psi_act.iter_mut().zip(&psi_cmd) {
                *a += angle_diff(*c, *a) * lag;
            }
            let form = Configuration::new(q_act.clone(), psi_act.clone());
            if &form != controller.form() {
                let r_old = controller.hover().bundle.r_cog_c;
                if let Err(e) = controller.set_form(&form, t) {
                    run.abort = Some(e.into());
                    break;
                }
                reanchor(&mut state, &r_old, &controller.hover().bundle.r_cog_c);
                body = RigidBody::from_hover(controller.hover(), model.gravity);
                tau = tau_min_value(&TorqueBasis::from_columns(
                    &controller.hover().basis.torque,
                    model.lambda_max,
                ));
            }
            if scenario.disturbance.force_noise_std > 0.0 {
                wrench.force_world = Vector3::from_fn(|_, _| noise.sample(&mut rng));
            }
            let reference = scenario.reference.at(t);
            let out = match controller.step(control_dt, &state.body_state(), &reference) {
                Ok(o) => o,
                Err(e) => {
                    run.abort = Some(e.into());
                    break;
                }
            };
            lambda = out.lambda.clone();
            run.telemetry.push(TelemetryRecord {
                t,
                position: state.position.into(),
                velocity: state.velocity.into(),
                reference_position: reference.position.into(),
                attitude: roll_pitch_yaw(&state.rotation()).into(),
                yaw_reference: reference.yaw,
                attitude_error: out.attitude_error.into(),
                q: form.q.clone(),
                psi: form.psi.clone(),
                lambda: out.lambda.iter().copied().collect(),
                lambda_s: controller.hover().bundle.lambda_s.iter().copied().collect(),
                tau_min: tau,
                saturated: out.saturated,
            });
        }
        state = dynamics_step(&state, &lambda, &body, &wrench, dt);
        if !state.is_finite() {
            run.abort = Some(SimError::Diverged { t });
            break;
        }
    }
    run.gain_updates = controller.gain_updates();
    run.final_state = state;
    Ok(run)
}
