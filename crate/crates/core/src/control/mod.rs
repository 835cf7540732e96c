//! Cascaded near-hover control: LQI attitude loop with lateral-force
//! suppression and PID position loop.

pub mod cascade;
pub mod lqi;
pub mod position;
pub mod riccati;

use crate::allocation::AllocationError;
use thiserror::Error;

pub use cascade::{BodyState, CascadeController, ControlOutput, ControllerConfig};
pub use lqi::{
    attitude_control, build_state_matrices, input_weight, solve_lqi_gain,
    synthesize_attitude_gains, torque_pseudo_inverse, AttitudeGains, AttitudeState, LqiWeights,
    StateMatrices,
};
pub use position::{
    collective_thrust, desired_attitude, position_control, PositionGains, Reference,
};
pub use riccati::{is_hurwitz, solve_care, spectral_abscissa, CareSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("inertia matrix is singular")]
    SingularInertia,
    #[error("Riccati solve failed: {0}")]
    AreFailed(String),
    #[error("torque allocation lost rank (sigma ratio {ratio:.3e}); singular form reached the controller")]
    RankDeficientQr { ratio: f64 },
    #[error("total thrust demand vanishes")]
    ZeroThrustDemand,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
}
