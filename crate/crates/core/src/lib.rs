//! Modeling, hover allocation, controllability analysis, vectoring-angle
//! planning, cascaded control and simulation of a planar multilinked aerial
//! robot whose rotors are tilted by a fixed angle and yawed by vectoring
//! servos.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod config;
pub mod control;
pub mod feasibility;
pub mod geometry;
pub mod model;
pub mod optim;
pub mod planner;
pub mod sim;

pub use nalgebra;

pub use allocation::{analyze, AllocationBundle, AllocationError, HoverModel};
pub use config::Config;
pub use control::{CascadeController, ControlError, ControllerConfig, LqiWeights, PositionGains};
pub use feasibility::{tau_min, FeasibilityReport, SingularClass, TorqueBasis};
pub use model::{Configuration, ModelError, RobotModel};
pub use planner::{PlanConstraints, PlanError, PlanResult, PlanTrace, PlanWeights};
pub use sim::{run_scenario, Scenario, SimError, SimRun};
