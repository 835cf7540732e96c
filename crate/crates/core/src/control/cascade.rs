//! Cascade of position and attitude loops with scheduled gain synthesis.

use super::lqi::{
    attitude_control, synthesize_attitude_gains, torque_pseudo_inverse, AttitudeGains,
    AttitudeState, LqiWeights,
};
use super::position::{
    collective_thrust, desired_attitude, position_control, PositionGains, Reference,
};
use super::ControlError;
use crate::allocation::{analyze, HoverModel};
use crate::geometry::{angle_diff, roll_pitch_yaw};
use crate::model::{Configuration, RobotModel};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub lqi: LqiWeights,
    pub position: PositionGains,
    /// Clamp on each attitude error integral, rad·s.
    pub attitude_integral_limit: f64,
    /// Clamp on each position error integral, m·s.
    pub position_integral_limit: f64,
    /// Configuration change (rad, any component) forcing a gain update.
    pub gain_update_threshold: f64,
    /// Gain update rate while the configuration keeps changing, Hz.
    pub gain_update_rate: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            lqi: LqiWeights::default(),
            position: PositionGains::default(),
            attitude_integral_limit: 0.5,
            position_integral_limit: 10.0,
            gain_update_threshold: 0.02,
            gain_update_rate: 20.0,
        }
    }
}

/// Measured rigid-body state of the CoG frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// World-from-CoG rotation.
    pub rotation: Matrix3<f64>,
    /// Body rates in the CoG frame.
    pub omega: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    /// Commanded thrust after clamping to `[0, lambda_max]`.
    pub lambda: DVector<f64>,
    pub lambda_att: DVector<f64>,
    pub lambda_pos: DVector<f64>,
    /// `attitude_des - attitude` (roll, pitch, yaw).
    pub attitude_error: Vector3<f64>,
    pub desired_roll_pitch: [f64; 2],
    /// Rotors clamped this tick.
    pub saturated: usize,
}

fn max_change(a: &Configuration, b: &Configuration) -> f64 {
    let dq = a.q.iter().zip(&b.q).map(|(x, y)| (x - y).abs());
    let dpsi = a
        .psi
        .iter()
        .zip(&b.psi)
        .map(|(x, y)| angle_diff(*x, *y).abs());
    dq.chain(dpsi).fold(0.0, f64::max)
}

fn clamp_vec(v: &mut Vector3<f64>, limit: f64) {
    for x in v.iter_mut() {
        *x = x.clamp(-limit, limit);
    }
}

/// Stateful cascade controller for one robot.
#[derive(Debug, Clone)]
pub struct CascadeController {
    model: RobotModel,
    config: ControllerConfig,
    form: Configuration,
    hover: HoverModel,
    qr_pinv: DMatrix<f64>,
    gains: AttitudeGains,
    gains_form: Configuration,
    gains_time: f64,
    gain_updates: usize,
    attitude_integral: Vector3<f64>,
    position_integral: Vector3<f64>,
    saturation_events: usize,
}

impl CascadeController {
    pub fn new(
        model: RobotModel,
        config: ControllerConfig,
        form: &Configuration,
        t: f64,
    ) -> Result<Self, ControlError> {
        let hover = analyze(&model, form)?;
        let qr_pinv = torque_pseudo_inverse(&hover.bundle.qr)?;
        let gains = synthesize_attitude_gains(
            &hover.inertia_cog,
            &hover.bundle.qt,
            &hover.bundle.qr,
            &config.lqi,
        )?;
        Ok(CascadeController {
            model,
            config,
            form: form.clone(),
            hover,
            qr_pinv,
            gains,
            gains_form: form.clone(),
            gains_time: t,
            gain_updates: 1,
            attitude_integral: Vector3::zeros(),
            position_integral: Vector3::zeros(),
            saturation_events: 0,
        })
    }

    pub fn hover(&self) -> &HoverModel {
        &self.hover
    }

    pub fn gains(&self) -> &AttitudeGains {
        &self.gains
    }

    pub fn form(&self) -> &Configuration {
        &self.form
    }

    pub fn gain_updates(&self) -> usize {
        self.gain_updates
    }

    pub fn saturation_events(&self) -> usize {
        self.saturation_events
    }

    pub fn integrals(&self) -> (Vector3<f64>, Vector3<f64>) {
        (self.attitude_integral, self.position_integral)
    }

    /// Installs a new form. The allocation is refreshed immediately; the
    /// Riccati gains when the form drifted past the threshold since the last
    /// synthesis or when the update period elapsed. Returns whether the
    /// gains were re-synthesized.
    pub fn set_form(&mut self, form: &Configuration, t: f64) -> Result<bool, ControlError> {
        if max_change(form, &self.form) == 0.0 {
            return Ok(false);
        }
        self.hover = analyze(&self.model, form)?;
        self.qr_pinv = torque_pseudo_inverse(&self.hover.bundle.qr)?;
        self.form = form.clone();
        let drift = max_change(form, &self.gains_form);
        let due = t - self.gains_time >= 1.0 / self.config.gain_update_rate - 1e-9;
        if drift > self.config.gain_update_threshold || (drift > 0.0 && due) {
            let h = &self.hover;
            self.gains = synthesize_attitude_gains(
                &h.inertia_cog,
                &h.bundle.qt,
                &h.bundle.qr,
                &self.config.lqi,
            )?;
            self.gains_form = form.clone();
            self.gains_time = t;
            self.gain_updates += 1;
            return Ok(true);
        }
        Ok(false)
    }

    /// One control tick of length `dt`: `lambda = lambda_att + lambda_pos`.
    pub fn step(
        &mut self,
        dt: f64,
        state: &BodyState,
        reference: &Reference,
    ) -> Result<ControlOutput, ControlError> {
        let mass = self.hover.total_mass();
        let g = self.model.gravity;
        let cfg = &self.config;

        let f_des = position_control(
            &state.position,
            &state.velocity,
            reference,
            &self.position_integral,
            &cfg.position,
            mass,
        );
        let f_total = f_des + Vector3::new(0.0, 0.0, mass * g);
        let (ax_des, ay_des) = desired_attitude(&f_total, reference.yaw)?;
        let lambda_pos = collective_thrust(
            &f_total,
            &state.rotation,
            &self.hover.bundle.lambda_s,
            mass,
            g,
        );

        let rpy = roll_pitch_yaw(&state.rotation);
        let e = Vector3::new(
            ax_des - rpy.x,
            ay_des - rpy.y,
            angle_diff(reference.yaw, rpy.z),
        );
        let de = Vector3::new(
            -state.omega.x,
            -state.omega.y,
            reference.yaw_rate - state.omega.z,
        );
        let x = AttitudeState::from_column_slice(&[
            e.x,
            de.x,
            e.y,
            de.y,
            e.z,
            de.z,
            self.attitude_integral.x,
            self.attitude_integral.y,
            self.attitude_integral.z,
        ]);
        let lambda_att = attitude_control(
            &x,
            &state.omega,
            &self.hover.inertia_cog,
            &self.qr_pinv,
            &self.gains,
        );

        let mut lambda = &lambda_att + &lambda_pos;
        let mut saturated = 0;
        for l in lambda.iter_mut() {
            let c = l.clamp(0.0, self.model.lambda_max);
            if c != *l {
                saturated += 1;
                *l = c;
            }
        }
        if saturated > 0 {
            self.saturation_events += 1;
            log::debug!(
                "{saturated} rotor(s) clamped to [0, {}] N",
                self.model.lambda_max
            );
        }

        self.attitude_integral += e * dt;
        clamp_vec(&mut self.attitude_integral, cfg.attitude_integral_limit);
        self.position_integral += (reference.position - state.position) * dt;
        clamp_vec(&mut self.position_integral, cfg.position_integral_limit);

        Ok(ControlOutput {
            lambda,
            lambda_att,
            lambda_pos,
            attitude_error: e,
            desired_roll_pitch: [ax_des, ay_des],
            saturated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rot_z;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn normal_form() -> Configuration {
        Configuration::new(vec![FRAC_PI_2; 3], vec![3.1, 0.0, 3.1, 0.0])
    }

    fn controller() -> CascadeController {
        CascadeController::new(
            RobotModel::default(),
            ControllerConfig::default(),
            &normal_form(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn perfect_hover_commands_static_thrust() {
        let mut c = controller();
        let yaw = 0.4;
        let state = BodyState {
            position: Vector3::new(0.0, 0.0, 1.0),
            velocity: Vector3::zeros(),
            rotation: rot_z(yaw),
            omega: Vector3::zeros(),
        };
        let reference = Reference {
            position: state.position,
            yaw,
            ..Default::default()
        };
        let out = c.step(0.005, &state, &reference).unwrap();
        assert_relative_eq!(out.lambda, c.hover().bundle.lambda_s, epsilon = 1e-9);
        assert_eq!(out.saturated, 0);
    }

    #[test]
    fn yaw_error_produces_mostly_yaw_torque() {
        let mut c = controller();
        let state = BodyState {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            rotation: Matrix3::identity(),
            omega: Vector3::zeros(),
        };
        let reference = Reference {
            yaw: 0.05,
            ..Default::default()
        };
        let out = c.step(0.005, &state, &reference).unwrap();
        let delta = &out.lambda - &c.hover().bundle.lambda_s;
        let torque = &c.hover().bundle.qr * &delta;
        assert!(torque.z > 0.0);
        assert!(torque.xy().norm() < 0.1 * torque.z.abs());
    }

    #[test]
    fn gain_cadence() {
        let mut c = controller();
        let mut f = normal_form();
        f.q[0] -= 0.005;
        assert!(!c.set_form(&f, 0.01).unwrap());
        assert_eq!(c.gain_updates(), 1);
        // period elapsed with a changed form
        f.q[0] -= 0.005;
        assert!(c.set_form(&f, 0.06).unwrap());
        // large jump forces synthesis immediately
        f.q[0] -= 0.05;
        assert!(c.set_form(&f, 0.061).unwrap());
        assert_eq!(c.gain_updates(), 3);
        // unchanged form never re-synthesizes
        assert!(!c.set_form(&f, 5.0).unwrap());
    }

    #[test]
    fn integrals_are_clamped() {
        let mut c = controller();
        let state = BodyState {
            position: Vector3::new(100.0, 0.0, 0.0),
            velocity: Vector3::zeros(),
            rotation: Matrix3::identity(),
            omega: Vector3::zeros(),
        };
        for _ in 0..2000 {
            c.step(0.005, &state, &Reference::default()).unwrap();
        }
        let (att, pos) = c.integrals();
        assert!(att.amax() <= 0.5 + 1e-12);
        assert_relative_eq!(pos.x.abs(), 10.0);
        assert!(c.saturation_events() > 0);
    }
}
