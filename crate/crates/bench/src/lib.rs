//! Shared fixtures for the pipeline benchmarks in `benches/`.

use std::f64::consts::FRAC_PI_2;
use vectorlink_core::{analyze, Configuration, HoverModel, RobotModel};

/// Named joint configurations covering the usual operating range.
pub const FORMS: [(&str, [f64; 3]); 3] = [
    ("normal", [FRAC_PI_2; 3]),
    ("line", [0.0; 3]),
    ("skew", [0.8, -0.4, 1.2]),
];

pub fn reference_model() -> RobotModel {
    RobotModel::default()
}

/// Hover analysis of `q` with a fixed non-trivial vectoring pattern.
pub fn hover_fixture(model: &RobotModel, q: [f64; 3]) -> HoverModel {
    analyze(
        model,
        &Configuration::new(q.to_vec(), vec![0.3, -0.5, 0.7, -0.2]),
    )
    .expect("fixture forms are regular")
}
