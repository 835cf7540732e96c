//! Deterministic closed-loop simulation.

pub mod dynamics;
pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod telemetry;

use crate::allocation::AllocationError;
use crate::control::ControlError;
use crate::model::ModelError;
use crate::planner::PlanError;
use thiserror::Error;

pub use dynamics::{dynamics_step, ExternalWrench, RigidBody, RigidBodyState};
pub use metrics::{max_position_error_after, metrics, Metrics};
pub use runner::{run_scenario, SimRun};
pub use scenario::{Disturbance, JointWaypoint, PoseWaypoint, ReferenceSpec, Scenario};
pub use telemetry::{write_csv, TelemetryRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error("state diverged at t = {t:.3} s")]
    Diverged { t: f64 },
    #[error("telemetry is empty")]
    EmptyTelemetry,
}
