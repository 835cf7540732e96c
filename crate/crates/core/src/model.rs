//! Kinematic chain and inertial aggregation of the planar N-link robot.
//!
//! Every link is a rod of length `l` lying along its own x axis. Link `i+1`
//! is attached at the far end of link `i` and rotated by the joint angle
//! `q_i` about the (shared) z axis. Each link carries one rotor at its
//! midpoint, raised by `rotor_height`, whose mount is yawed by the vectoring
//! angle `psi_i` and tilted by the fixed angle `beta`.

use crate::geometry::{rot_y, rot_z, wrap_angle};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Reference platform total mass, kg.
pub const REFERENCE_TOTAL_MASS: f64 = 4.7;

/// Reference platform link length, m.
pub const REFERENCE_LINK_LENGTH: f64 = 0.6;

/// Tilt angle flown on the reference platform, rad.
pub const REFERENCE_TILT: f64 = 0.34;

/// Rotor drag-moment ratio magnitude used by the default model, m.
pub const DEFAULT_DRAG_RATIO: f64 = 0.004;

/// Per-rotor thrust limit of the default model, N.
///
/// Calibrated so the optimized normal form (all joints at pi/2) yields a
/// guaranteed minimum control torque of 4.81 N·m; see
/// `planner::calibrate_lambda_max`.
pub const DEFAULT_LAMBDA_MAX: f64 = 26.92;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("robot needs at least 2 links, got {0}")]
    TooFewLinks(usize),
    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("joint {index} angle {value} outside [-pi/2, pi/2]")]
    JointLimit { index: usize, value: f64 },
}

/// Immutable physical parameters of the robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotModel {
    pub n_links: usize,
    /// Mass of every link module including its rotor and battery, kg.
    pub link_mass: Vec<f64>,
    /// Joint-to-joint link length `l`, m.
    pub link_length: f64,
    /// Fixed rotor tilt `beta`, rad.
    pub tilt_beta: f64,
    /// Signed drag-moment ratio `kappa_i` per rotor, m.
    pub drag_ratio: Vec<f64>,
    /// Per-rotor thrust limit, N.
    pub lambda_max: f64,
    /// Height of the propeller plane above the link rod axis, m.
    pub rotor_height: f64,
    /// Fraction of each link's mass carried by the battery point mass.
    pub battery_fraction: f64,
    /// Distance of the battery below the rod axis, m.
    pub battery_drop: f64,
    pub gravity: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self::quad(REFERENCE_TILT)
    }
}

impl RobotModel {
    /// Four-link reference platform with the given tilt angle.
    ///
    /// The rotor plane sits 0.05 m above the rod and half of every link's mass
    /// hangs 0.1 m below it, so the CoG-to-propeller height is 0.1 m.
    pub fn quad(tilt_beta: f64) -> Self {
        Self::chain(4, tilt_beta)
    }

    /// `n`-link chain with the reference per-link parameters (total mass scaled
    /// with the link count).
    pub fn chain(n: usize, tilt_beta: f64) -> Self {
        let per_link = REFERENCE_TOTAL_MASS / 4.0;
        RobotModel {
            n_links: n,
            link_mass: vec![per_link; n],
            link_length: REFERENCE_LINK_LENGTH,
            tilt_beta,
            drag_ratio: (0..n)
                .map(|i| {
                    if i % 2 == 0 {
                        -DEFAULT_DRAG_RATIO
                    } else {
                        DEFAULT_DRAG_RATIO
                    }
                })
                .collect(),
            lambda_max: DEFAULT_LAMBDA_MAX,
            rotor_height: 0.05,
            battery_fraction: 0.5,
            battery_drop: 0.1,
            gravity: STANDARD_GRAVITY,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.link_mass.iter().sum()
    }

    pub fn n_joints(&self) -> usize {
        self.n_links - 1
    }

    /// Vertical distance from the link-plane CoG to the propeller plane.
    pub fn cog_to_propeller(&self) -> f64 {
        self.rotor_height + self.battery_fraction * self.battery_drop
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_links;
        if n < 2 {
            return Err(ModelError::TooFewLinks(n));
        }
        if self.link_mass.len() != n {
            return Err(ModelError::DimensionMismatch {
                what: "link_mass",
                expected: n,
                actual: self.link_mass.len(),
            });
        }
        if self.drag_ratio.len() != n {
            return Err(ModelError::DimensionMismatch {
                what: "drag_ratio",
                expected: n,
                actual: self.drag_ratio.len(),
            });
        }
        let bad = |name: &'static str, reason: &str| {
            Err(ModelError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.link_mass.iter().any(|m| !(*m > 0.0)) {
            return bad("link_mass", "all masses must be positive");
        }
        if !(self.link_length > 0.0) {
            return bad("link_length", "must be positive");
        }
        if !(0.0..FRAC_PI_2).contains(&self.tilt_beta) {
            return bad("tilt_beta", "must lie in [0, pi/2)");
        }
        if !(self.lambda_max > 0.0) {
            return bad("lambda_max", "must be positive");
        }
        if !(self.gravity > 0.0) {
            return bad("gravity", "must be positive");
        }
        if !(0.0..1.0).contains(&self.battery_fraction) || self.battery_drop < 0.0 {
            return bad(
                "battery",
                "fraction must be in [0, 1) and drop non-negative",
            );
        }
        for w in self.drag_ratio.windows(2) {
            if w[0] * w[1] > 0.0 {
                return bad("drag_ratio", "signs must alternate between adjacent rotors");
            }
        }
        Ok(())
    }
}

/// Joint angles `q` (length N-1) and vectoring angles `psi` (length N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub q: Vec<f64>,
    pub psi: Vec<f64>,
}

impl Configuration {
    /// Builds a configuration, wrapping `psi` into (-pi, pi].
    pub fn new(q: Vec<f64>, psi: Vec<f64>) -> Self {
        let psi = psi.into_iter().map(wrap_angle).collect();
        Configuration { q, psi }
    }

    pub fn check(&self, model: &RobotModel) -> Result<(), ModelError> {
        if self.q.len() != model.n_joints() {
            return Err(ModelError::DimensionMismatch {
                what: "q",
                expected: model.n_joints(),
                actual: self.q.len(),
            });
        }
        if self.psi.len() != model.n_links {
            return Err(ModelError::DimensionMismatch {
                what: "psi",
                expected: model.n_links,
                actual: self.psi.len(),
            });
        }
        check_joint_limits(&self.q)
    }
}

pub(crate) fn check_joint_limits(q: &[f64]) -> Result<(), ModelError> {
    const SLACK: f64 = 1e-9;
    for (index, &value) in q.iter().enumerate() {
        if !(value.abs() <= FRAC_PI_2 + SLACK) {
            return Err(ModelError::JointLimit { index, value });
        }
    }
    Ok(())
}

/// Rigid transform expressed in the root link frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Link, link-CoM and rotor frames, all relative to the root link `{L1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub links: Vec<Pose>,
    pub link_coms: Vec<Vector3<f64>>,
    pub rotors: Vec<Pose>,
}

impl FrameSet {
    /// Thrust axis of rotor `i` in the root frame.
    pub fn thrust_axis(&self, i: usize) -> Vector3<f64> {
        self.rotors[i].rotation.column(2).into_owned()
    }
}

/// Total mass, CoG and inertia of the whole robot.
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaSummary {
    pub total_mass: f64,
    /// CoG position in `{L1}`.
    pub cog_origin: Vector3<f64>,
    /// Inertia about the CoG, axes parallel to `{L1}` (the candidate frame `{C}`).
    pub inertia: Matrix3<f64>,
}

impl InertiaSummary {
    /// Inertia re-expressed in a frame rotated by `r` (`r` maps `{C}` vectors
    /// into the target frame).
    pub fn rotated(&self, r: &Matrix3<f64>) -> Matrix3<f64> {
        r * self.inertia * r.transpose()
    }
}

/// Composes link, CoM and rotor frames for `config`.
pub fn forward_kinematics(
    model: &RobotModel,
    config: &Configuration,
) -> Result<FrameSet, ModelError> {
    config.check(model)?;
    let l = model.link_length;
    let n = model.n_links;
    let tilt = rot_y(model.tilt_beta);
    let com_local = Vector3::new(0.5 * l, 0.0, -model.battery_fraction * model.battery_drop);
    let rotor_local = Vector3::new(0.5 * l, 0.0, model.rotor_height);

    let mut links = Vec::with_capacity(n);
    let mut link_coms = Vec::with_capacity(n);
    let mut rotors = Vec::with_capacity(n);
    let mut rotation = Matrix3::identity();
    let mut origin = Vector3::zeros();
    for i in 0..n {
        if i > 0 {
            origin += rotation * Vector3::new(l, 0.0, 0.0);
            rotation *= rot_z(config.q[i - 1]);
        }
        let link = Pose {
            rotation,
            translation: origin,
        };
        link_coms.push(link.transform_point(&com_local));
        rotors.push(Pose {
            rotation: rotation * rot_z(config.psi[i]) * tilt,
            translation: link.transform_point(&rotor_local),
        });
        links.push(link);
    }
    Ok(FrameSet {
        links,
        link_coms,
        rotors,
    })
}

/// Mass-weighted CoG and parallel-axis inertia of all links.
///
/// Each link is a slender rod carrying `(1 - battery_fraction)` of its mass
/// plus a battery point mass hung `battery_drop` below the rod centre.
pub fn aggregate_inertia(model: &RobotModel, frames: &FrameSet) -> InertiaSummary {
    let total_mass = model.total_mass();
    let cog_origin = frames
        .link_coms
        .iter()
        .zip(&model.link_mass)
        .fold(Vector3::zeros(), |acc, (p, m)| acc + p * *m)
        / total_mass;

    let l = model.link_length;
    let mut inertia = Matrix3::zeros();
    for (link, &m) in frames.links.iter().zip(&model.link_mass) {
        let rod_mass = m * (1.0 - model.battery_fraction);
        let battery_mass = m * model.battery_fraction;
        let rod_center = link.transform_point(&Vector3::new(0.5 * l, 0.0, 0.0));
        let battery = link.transform_point(&Vector3::new(0.5 * l, 0.0, -model.battery_drop));

        let rod_axis_moment = rod_mass * l * l / 12.0;
        let rod_local =
            Matrix3::from_diagonal(&Vector3::new(0.0, rod_axis_moment, rod_axis_moment));
        inertia += link.rotation * rod_local * link.rotation.transpose();
        inertia += point_inertia(rod_mass, &(rod_center - cog_origin));
        inertia += point_inertia(battery_mass, &(battery - cog_origin));
    }
    InertiaSummary {
        total_mass,
        cog_origin,
        inertia: 0.5 * (inertia + inertia.transpose()),
    }
}

pub(crate) fn point_inertia(mass: f64, r: &Vector3<f64>) -> Matrix3<f64> {
    mass * (Matrix3::identity() * r.norm_squared() - r * r.transpose())
}
