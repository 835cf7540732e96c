//! Scenario description: rates, joint schedule, reference and disturbance.

use super::SimError;
use crate::control::Reference;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Joint angles reached at time `t`; the schedule interpolates linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointWaypoint {
    pub t: f64,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseWaypoint {
    pub t: f64,
    pub position: [f64; 3],
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    Hover {
        position: [f64; 3],
        yaw: f64,
    },
    /// Horizontal circle starting at `center + [radius, 0, 0]`, yaw advancing
    /// by `yaw_turns` full turns per period.
    Circle {
        center: [f64; 3],
        radius: f64,
        period: f64,
        yaw_turns: f64,
        initial_yaw: f64,
    },
    /// Piecewise-linear position and yaw.
    Waypoints {
        points: Vec<PoseWaypoint>,
    },
}

impl ReferenceSpec {
    pub fn at(&self, t: f64) -> Reference {
        match self {
            ReferenceSpec::Hover { position, yaw } => Reference {
                position: Vector3::from(*position),
                yaw: *yaw,
                ..Default::default()
            },
            ReferenceSpec::Circle {
                center,
                radius,
                period,
                yaw_turns,
                initial_yaw,
            } => {
                let w = TAU / period;
                let (s, c) = (w * t).sin_cos();
                Reference {
                    position: Vector3::from(*center) + Vector3::new(radius * c, radius * s, 0.0),
                    velocity: Vector3::new(-radius * w * s, radius * w * c, 0.0),
                    acceleration: Vector3::new(-radius * w * w * c, -radius * w * w * s, 0.0),
                    yaw: initial_yaw + yaw_turns * w * t,
                    yaw_rate: yaw_turns * w,
                }
            }
            ReferenceSpec::Waypoints { points } => {
                let Some(first) = points.first() else {
                    return Reference::default();
                };
                let hold = |p: &PoseWaypoint| Reference {
                    position: Vector3::from(p.position),
                    yaw: p.yaw,
                    ..Default::default()
                };
                if t <= first.t {
                    return hold(first);
                }
                for w in points.windows(2) {
                    let (a, b) = (&w[0], &w[1]);
                    if t <= b.t && b.t > a.t {
                        let span = b.t - a.t;
                        let s = (t - a.t) / span;
                        let (pa, pb) = (Vector3::from(a.position), Vector3::from(b.position));
                        return Reference {
                            position: pa + (pb - pa) * s,
                            velocity: (pb - pa) / span,
                            acceleration: Vector3::zeros(),
                            yaw: a.yaw + (b.yaw - a.yaw) * s,
                            yaw_rate: (b.yaw - a.yaw) / span,
                        };
                    }
                }
                hold(points.last().expect("non-empty"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Disturbance {
    /// Constant force in the CoG frame, N.
    pub force_body: [f64; 3],
    /// Constant torque in the CoG frame, N·m.
    pub torque_body: [f64; 3],
    /// Standard deviation of white world-frame force noise per axis, N,
    /// resampled every control tick.
    pub force_noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub integration_rate: f64,
    pub control_rate: f64,
    pub planner_rate: f64,
    pub seed: u64,
    /// Largest joint speed the schedule may demand, rad/s.
    pub max_joint_rate: f64,
    pub joint_schedule: Vec<JointWaypoint>,
    pub reference: ReferenceSpec,
    /// Initial CoG offset from the reference, m.
    pub initial_offset: [f64; 3],
    pub disturbance: Disturbance,
    /// First-order lag on joint and vectoring servos.
    pub servo_lag: bool,
    pub servo_time_constant: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::hover()
    }
}

fn schedule(points: &[(f64, [f64; 3])]) -> Vec<JointWaypoint> {
    points
        .iter()
        .map(|(t, q)| JointWaypoint {
            t: *t,
            q: q.to_vec(),
        })
        .collect()
}

impl Scenario {
    /// Normal form hovering at 1 m for 10 s.
    pub fn hover() -> Self {
        Scenario {
            name: "hover".into(),
            duration: 10.0,
            integration_rate: 1000.0,
            control_rate: 200.0,
            planner_rate: 20.0,
            seed: 0,
            max_joint_rate: 0.25,
            joint_schedule: schedule(&[(0.0, [FRAC_PI_2; 3])]),
            reference: ReferenceSpec::Hover {
                position: [0.0, 0.0, 1.0],
                yaw: 0.0,
            },
            initial_offset: [0.0; 3],
            disturbance: Disturbance::default(),
            servo_lag: false,
            servo_time_constant: 0.1,
        }
    }

    /// 1 m circle in 30 s with a full yaw turn, flown in the line-shape form.
    pub fn circle_line() -> Self {
        Scenario {
            name: "circle_line".into(),
            duration: 30.0,
            joint_schedule: schedule(&[(0.0, [0.0; 3])]),
            reference: ReferenceSpec::Circle {
                center: [0.0, 0.0, 1.0],
                radius: 1.0,
                period: 30.0,
                yaw_turns: 1.0,
                initial_yaw: 0.0,
            },
            ..Scenario::hover()
        }
    }

    /// Joints move one after another from pi/2 to -pi/2 at 0.25 rad/s,
    /// passing the S1 form on the way.
    pub fn large_deformation() -> Self {
        let leg = PI / 0.25;
        let (h, p) = (FRAC_PI_2, -FRAC_PI_2);
        Scenario {
            name: "large_deformation".into(),
            duration: 2.0 + 3.0 * leg + 3.0,
            joint_schedule: schedule(&[
                (0.0, [h, h, h]),
                (2.0, [h, h, h]),
                (2.0 + leg, [p, h, h]),
                (2.0 + 2.0 * leg, [p, p, h]),
                (2.0 + 3.0 * leg, [p, p, p]),
            ]),
            ..Scenario::hover()
        }
    }

    /// Normal form folds into the line-shape form, then hovers 10 s.
    pub fn normal_to_line() -> Self {
        let fold = FRAC_PI_2 / 0.25;
        Scenario {
            name: "normal_to_line".into(),
            duration: 2.0 + fold + 10.0,
            joint_schedule: schedule(&[
                (0.0, [FRAC_PI_2; 3]),
                (2.0, [FRAC_PI_2; 3]),
                (2.0 + fold, [0.0; 3]),
            ]),
            ..Scenario::hover()
        }
    }

    /// Normal-form hover with a constant 0.5 N lateral body force.
    pub fn hover_disturbance() -> Self {
        Scenario {
            name: "hover_disturbance".into(),
            duration: 600.0,
            disturbance: Disturbance {
                force_body: [0.5, 0.0, 0.0],
                ..Default::default()
            },
            ..Scenario::hover()
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 5] = [
        "hover",
        "hover_disturbance",
        "circle_line",
        "large_deformation",
        "normal_to_line",
    ];

    pub fn builtin(name: &str) -> Option<Self> {
        Some(match name {
            "hover" => Self::hover(),
            "hover_disturbance" => Self::hover_disturbance(),
            "circle_line" => Self::circle_line(),
            "large_deformation" => Self::large_deformation(),
            "normal_to_line" => Self::normal_to_line(),
            _ => return None,
        })
    }

    pub fn validate(&self, n_joints: usize) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.duration > 0.0) {
            return bad("duration must be positive".into());
        }
        for (name, rate) in [
            ("integration_rate", self.integration_rate),
            ("control_rate", self.control_rate),
            ("planner_rate", self.planner_rate),
        ] {
            if !(rate > 0.0) {
                return bad(format!("{name} must be positive"));
            }
        }
        self.control_divider()?;
        self.planner_divider()?;
        if self.servo_lag && !(self.servo_time_constant > 0.0) {
            return bad("servo_time_constant must be positive".into());
        }
        let Some(first) = self.joint_schedule.first() else {
            return bad("joint_schedule is empty".into());
        };
        if first.t > 0.0 {
            return bad("joint_schedule must start at t = 0".into());
        }
        for w in &self.joint_schedule {
            if w.q.len() != n_joints {
                return bad(format!(
                    "waypoint at t = {} has {} joints, expected {n_joints}",
                    w.t,
                    w.q.len()
                ));
            }
            if w.q.iter().any(|q| !(q.abs() <= FRAC_PI_2 + 1e-9)) {
                return bad(format!("waypoint at t = {} exceeds the joint limits", w.t));
            }
        }
        for pair in self.joint_schedule.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let dt = b.t - a.t;
            if !(dt > 0.0) {
                return bad(format!(
                    "joint_schedule not strictly increasing at t = {}",
                    b.t
                ));
            }
            let step =
                a.q.iter()
                    .zip(&b.q)
                    .map(|(x, y)| (y - x).abs())
                    .fold(0.0, f64::max);
            if step / dt > self.max_joint_rate * (1.0 + 1e-9) {
                return bad(format!(
                    "joint rate {:.4} rad/s between t = {} and {} exceeds {}",
                    step / dt,
                    a.t,
                    b.t,
                    self.max_joint_rate
                ));
            }
        }
        if let ReferenceSpec::Waypoints { points } = &self.reference {
            if points.is_empty() || points.windows(2).any(|w| w[1].t < w[0].t) {
                return bad("reference waypoints must be non-empty and time-ordered".into());
            }
        }
        if let ReferenceSpec::Circle { period, radius, .. } = &self.reference {
            if !(*period > 0.0) || !(*radius >= 0.0) {
                return bad("circle needs a positive period and non-negative radius".into());
            }
        }
        Ok(())
    }

    fn divider(fast: f64, slow: f64, what: &str) -> Result<usize, SimError> {
        let ratio = fast / slow;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio {
            return Err(SimError::InvalidScenario(format!(
                "{what} must divide evenly ({fast} / {slow})"
            )));
        }
        Ok(k as usize)
    }

    /// Integration steps per control tick.
    pub fn control_divider(&self) -> Result<usize, SimError> {
        Self::divider(
            self.integration_rate,
            self.control_rate,
            "integration_rate / control_rate",
        )
    }

    /// Integration steps per planner tick.
    pub fn planner_divider(&self) -> Result<usize, SimError> {
        let k = Self::divider(
            self.integration_rate,
            self.planner_rate,
            "integration_rate / planner_rate",
        )?;
        if k % self.control_divider()? != 0 {
            return Err(SimError::InvalidScenario(
                "planner ticks must coincide with control ticks".into(),
            ));
        }
        Ok(k)
    }

    /// Planner ticks covering the whole run (one past the end), with the
    /// scheduled joints at each tick.
    pub fn planner_grid(&self) -> Vec<(f64, Vec<f64>)> {
        let dt = 1.0 / self.planner_rate;
        let n = (self.duration * self.planner_rate - 1e-9).ceil().max(0.0) as usize;
        (0..=n)
            .map(|k| (k as f64 * dt, self.joints_at(k as f64 * dt)))
            .collect()
    }

    /// Scheduled joint angles at `t` (held after the last waypoint).
    pub fn joints_at(&self, t: f64) -> Vec<f64> {
        let s = &self.joint_schedule;
        if t <= s[0].t {
            return s[0].q.clone();
        }
        for w in s.windows(2) {
            if t <= w[1].t {
                let a = (t - w[0].t) / (w[1].t - w[0].t);
                return w[0]
                    .q
                    .iter()
                    .zip(&w[1].q)
                    .map(|(x, y)| x + (y - x) * a)
                    .collect();
            }
        }
        s.last().expect("non-empty").q.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtins_are_valid() {
        for name in Scenario::BUILTIN_NAMES {
            let s = Scenario::builtin(name).unwrap();
            assert_eq!(s.name, name);
            s.validate(3).unwrap();
        }
        assert!(Scenario::builtin("loop").is_none());
    }

    #[test]
    fn large_deformation_passes_s1() {
        let s = Scenario::large_deformation();
        let mid = 2.0 + 1.5 * PI / 0.25;
        let q = s.joints_at(mid);
        assert_relative_eq!(q[0], -FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(q[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(q[2], FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn too_fast_schedule_rejected() {
        let mut s = Scenario::normal_to_line();
        s.joint_schedule[2].t = 3.0;
        assert!(matches!(s.validate(3), Err(SimError::InvalidScenario(_))));
    }

    #[test]
    fn circle_reference_is_consistent() {
        let r = Scenario::circle_line().reference;
        let (a, b) = (r.at(3.0), r.at(3.0 + 1e-6));
        assert_relative_eq!((b.position - a.position) / 1e-6, a.velocity, epsilon = 1e-5);
        assert_relative_eq!(
            (b.velocity - a.velocity) / 1e-6,
            a.acceleration,
            epsilon = 1e-5
        );
        assert_relative_eq!(r.at(30.0).yaw, TAU, epsilon = 1e-12);
        assert_relative_eq!(r.at(0.0).position, Vector3::new(1.0, 0.0, 1.0));
    }

    #[test]
    fn uneven_rates_rejected() {
        let s = Scenario {
            control_rate: 300.0,
            ..Scenario::hover()
        };
        assert!(s.validate(3).is_err());
    }
}
