//! Nonlinear rigid-body dynamics of the CoG frame, integrated by RK4.
//!
//! ```text
//! m (r'' + g e3) = R (Qt lambda + f_body) + f_world
//! I w' + w x I w = Qr lambda + tau_body
//! ```
//!
//! Attitude is a unit quaternion (world from CoG), renormalized after each
//! step. Thrust and disturbance are held constant over a step.

use crate::allocation::HoverModel;
use crate::control::BodyState;
use nalgebra::{DVector, Matrix3, Matrix3xX, Quaternion, UnitQuaternion, Vector3, Vector4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: UnitQuaternion<f64>,
    /// Body rates in the CoG frame.
    pub omega: Vector3<f64>,
}

impl RigidBodyState {
    /// At rest with a level CoG frame turned by `yaw`.
    pub fn level(position: Vector3<f64>, yaw: f64) -> Self {
        RigidBodyState {
            t: 0.0,
            position,
            velocity: Vector3::zeros(),
            attitude: UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
            omega: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.attitude.to_rotation_matrix().into_inner()
    }

    pub fn body_state(&self) -> BodyState {
        BodyState {
            position: self.position,
            velocity: self.velocity,
            rotation: self.rotation(),
            omega: self.omega,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position
            .iter()
            .chain(self.velocity.iter())
            .chain(self.omega.iter())
            .all(|v| v.is_finite())
            && self.attitude.coords.iter().all(|v| v.is_finite())
    }
}

/// Inertial and allocation data of the current form.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidBody {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub inertia_inv: Matrix3<f64>,
    pub qt: Matrix3xX<f64>,
    pub qr: Matrix3xX<f64>,
    pub gravity: f64,
}

impl RigidBody {
    pub fn from_hover(hover: &HoverModel, gravity: f64) -> Self {
        Self::new(
            hover.total_mass(),
            hover.inertia_cog,
            hover.bundle.qt.clone(),
            hover.bundle.qr.clone(),
            gravity,
        )
    }

    pub fn new(
        mass: f64,
        inertia: Matrix3<f64>,
        qt: Matrix3xX<f64>,
        qr: Matrix3xX<f64>,
        gravity: f64,
    ) -> Self {
        RigidBody {
            mass,
            inertia_inv: inertia.try_inverse().expect("inertia must be invertible"),
            inertia,
            qt,
            qr,
            gravity,
        }
    }

    pub fn kinetic_energy(&self, s: &RigidBodyState) -> f64 {
        0.5 * self.mass * s.velocity.norm_squared() + 0.5 * s.omega.dot(&(self.inertia * s.omega))
    }

    /// Angular momentum in the world frame.
    pub fn angular_momentum(&self, s: &RigidBodyState) -> Vector3<f64> {
        s.attitude * (self.inertia * s.omega)
    }
}

/// External wrench on top of the rotor thrust.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExternalWrench {
    pub force_body: Vector3<f64>,
    pub force_world: Vector3<f64>,
    pub torque_body: Vector3<f64>,
}

struct Derivative {
    dr: Vector3<f64>,
    dv: Vector3<f64>,
    dq: Vector4<f64>,
    dw: Vector3<f64>,
}

fn derivative(
    v: &Vector3<f64>,
    q: &Vector4<f64>,
    w: &Vector3<f64>,
    body: &RigidBody,
    force_body: &Vector3<f64>,
    force_world: &Vector3<f64>,
    torque: &Vector3<f64>,
) -> Derivative {
    let quat = Quaternion::from(*q);
    // unnormalized quaternion rotation: scale by 1/|q|^2
    let rotated =
        (quat * Quaternion::from_imag(*force_body) * quat.conjugate()).imag() / quat.norm_squared();
    let dv = (rotated + force_world) / body.mass - Vector3::new(0.0, 0.0, body.gravity);
    let dq = (quat * Quaternion::from_imag(*w) * 0.5).coords;
    let dw = body.inertia_inv * (torque - w.cross(&(body.inertia * w)));
    Derivative { dr: *v, dv, dq, dw }
}

/// Advances `state` by `dt` with thrust `lambda` held constant.
pub fn dynamics_step(
    state: &RigidBodyState,
    lambda: &DVector<f64>,
    body: &RigidBody,
    wrench: &ExternalWrench,
    dt: f64,
) -> RigidBodyState {
    let force_body = &body.qt * lambda + wrench.force_body;
    let torque = &body.qr * lambda + wrench.torque_body;
    let f = |v: &Vector3<f64>, q: &Vector4<f64>, w: &Vector3<f64>| {
        derivative(v, q, w, body, &force_body, &wrench.force_world, &torque)
    };

    let (r0, v0, q0, w0) = (
        state.position,
        state.velocity,
        state.attitude.coords,
        state.omega,
    );
    let k1 = f(&v0, &q0, &w0);
    let k2 = f(
        &(v0 + k1.dv * (dt / 2.0)),
        &(q0 + k1.dq * (dt / 2.0)),
        &(w0 + k1.dw * (dt / 2.0)),
    );
    let k3 = f(
        &(v0 + k2.dv * (dt / 2.0)),
        &(q0 + k2.dq * (dt / 2.0)),
        &(w0 + k2.dw * (dt / 2.0)),
    );
    let k4 = f(&(v0 + k3.dv * dt), &(q0 + k3.dq * dt), &(w0 + k3.dw * dt));
    let sum3 = |a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>, d: Vector3<f64>| {
        (a + (b + c) * 2.0 + d) * (dt / 6.0)
    };

    let q = q0 + (k1.dq + (k2.dq + k3.dq) * 2.0 + k4.dq) * (dt / 6.0);
    RigidBodyState {
        t: state.t + dt,
        position: r0 + sum3(k1.dr, k2.dr, k3.dr, k4.dr),
        velocity: v0 + sum3(k1.dv, k2.dv, k3.dv, k4.dv),
        attitude: UnitQuaternion::from_quaternion(Quaternion::from(q)),
        omega: w0 + sum3(k1.dw, k2.dw, k3.dw, k4.dw),
    }
}
