//! PID position control and extraction of attitude and collective thrust.

use super::ControlError;
use crate::geometry::rot_z;
use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositionGains {
    pub kp: [f64; 3],
    pub ki: [f64; 3],
    pub kd: [f64; 3],
}

impl Default for PositionGains {
    fn default() -> Self {
        PositionGains {
            kp: [2.3, 2.3, 3.6],
            ki: [0.02, 0.02, 3.4],
            kd: [4.0, 4.0, 1.55],
        }
    }
}

/// Position, velocity, acceleration and yaw reference at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub yaw: f64,
    pub yaw_rate: f64,
}

/// `f = m (Kp e + Ki Ie + Kd de + a_des)`, gravity excluded.
pub fn position_control(
    position: &Vector3<f64>,
    velocity: &Vector3<f64>,
    reference: &Reference,
    error_integral: &Vector3<f64>,
    gains: &PositionGains,
    mass: f64,
) -> Vector3<f64> {
    let e = reference.position - position;
    let de = reference.velocity - velocity;
    let kp = Vector3::from(gains.kp);
    let ki = Vector3::from(gains.ki);
    let kd = Vector3::from(gains.kd);
    (kp.component_mul(&e)
        + ki.component_mul(error_integral)
        + kd.component_mul(&de)
        + reference.acceleration)
        * mass
}

/// Roll and pitch that align the thrust axis with `f_total` (gravity
/// included) after removing the yaw.
pub fn desired_attitude(f_total: &Vector3<f64>, yaw: f64) -> Result<(f64, f64), ControlError> {
    if f_total.norm() < 1e-9 {
        return Err(ControlError::ZeroThrustDemand);
    }
    let f = rot_z(yaw).transpose() * f_total;
    let alpha_x = (-f.y).atan2(f.x.hypot(f.z));
    let alpha_y = f.x.atan2(f.z);
    Ok((alpha_x, alpha_y))
}

/// Static thrust scaled by the demand projected on the body z axis:
/// `lambda_s / (m g) * (R b3)^T f_total`.
pub fn collective_thrust(
    f_total: &Vector3<f64>,
    r_world_cog: &Matrix3<f64>,
    lambda_s: &DVector<f64>,
    mass: f64,
    gravity: f64,
) -> DVector<f64> {
    let f_t = r_world_cog.column(2).dot(f_total);
    lambda_s * (f_t / (mass * gravity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rot_x, rot_y};
    use approx::assert_relative_eq;

    #[test]
    fn zero_error_gives_zero_force() {
        let r = Vector3::new(1.0, 2.0, 3.0);
        let reference = Reference {
            position: r,
            ..Default::default()
        };
        let f = position_control(
            &r,
            &Vector3::zeros(),
            &reference,
            &Vector3::zeros(),
            &PositionGains::default(),
            4.7,
        );
        assert_eq!(f, Vector3::zeros());
    }

    #[test]
    fn level_for_vertical_thrust() {
        assert_eq!(
            desired_attitude(&Vector3::new(0.0, 0.0, 46.0), 0.7).unwrap(),
            (0.0, 0.0)
        );
        let theta: f64 = 0.1;
        let (ax, ay) =
            desired_attitude(&Vector3::new(0.0, -40.0 * theta.tan(), 40.0), 0.0).unwrap();
        assert_relative_eq!(ax, theta, epsilon = 1e-14);
        assert_relative_eq!(ay, 0.0);
        assert_eq!(
            desired_attitude(&Vector3::zeros(), 0.0),
            Err(ControlError::ZeroThrustDemand)
        );
    }

    #[test]
    fn attitude_maps_thrust_axis_onto_demand() {
        let f = Vector3::new(3.0, -5.0, 38.0);
        let yaw = 1.2;
        let (ax, ay) = desired_attitude(&f, yaw).unwrap();
        let axis = rot_z(yaw) * rot_y(ay) * rot_x(ax) * Vector3::z();
        assert_relative_eq!(axis, f.normalize(), epsilon = 1e-12);
    }

    #[test]
    fn collective_thrust_projects() {
        let ls = DVector::from_vec(vec![11.0, 12.0, 11.5, 11.6]);
        let hover = collective_thrust(
            &Vector3::new(0.0, 0.0, 4.7 * 9.8),
            &Matrix3::identity(),
            &ls,
            4.7,
            9.8,
        );
        assert_relative_eq!(hover, ls, epsilon = 1e-12);
        let side = collective_thrust(
            &Vector3::new(5.0, 0.0, 0.0),
            &Matrix3::identity(),
            &ls,
            4.7,
            9.8,
        );
        assert_eq!(side.norm(), 0.0);
    }
}
