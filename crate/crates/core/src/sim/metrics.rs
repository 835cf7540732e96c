//! Tracking-error summary of a telemetry stream.

use super::telemetry::TelemetryRecord;
use super::SimError;
use crate::geometry::angle_diff;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub samples: usize,
    pub duration: f64,
    /// Per-axis RMS position error, m.
    pub rms_position: [f64; 3],
    pub max_position_error: f64,
    pub final_position_error: f64,
    pub rms_yaw: f64,
    pub max_yaw_error: f64,
    pub min_tau_min: f64,
    /// Largest change of any vectoring angle between consecutive ticks.
    pub max_psi_step: f64,
    /// Share of ticks with at least one clamped rotor.
    pub saturation_fraction: f64,
}

fn position_error(r: &TelemetryRecord) -> [f64; 3] {
    [
        r.position[0] - r.reference_position[0],
        r.position[1] - r.reference_position[1],
        r.position[2] - r.reference_position[2],
    ]
}

fn norm(e: [f64; 3]) -> f64 {
    e.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn metrics(records: &[TelemetryRecord]) -> Result<Metrics, SimError> {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Err(SimError::EmptyTelemetry);
    };
    let n = records.len() as f64;
    let mut sq = [0.0; 3];
    let mut yaw_sq = 0.0;
    let mut max_pos = 0.0f64;
    let mut max_yaw = 0.0f64;
    let mut min_tau = f64::INFINITY;
    let mut saturated = 0usize;
    for r in records {
        let e = position_error(r);
        for k in 0..3 {
            sq[k] += e[k] * e[k];
        }
        max_pos = max_pos.max(norm(e));
        let ey = angle_diff(r.attitude[2], r.yaw_reference);
        yaw_sq += ey * ey;
        max_yaw = max_yaw.max(ey.abs());
        min_tau = min_tau.min(r.tau_min);
        saturated += usize::from(r.saturated > 0);
    }
    let max_psi_step = records
        .windows(2)
        .flat_map(|w| {
            w[1].psi
                .iter()
                .zip(&w[0].psi)
                .map(|(a, b)| angle_diff(*a, *b).abs())
        })
        .fold(0.0, f64::max);
    Ok(Metrics {
        samples: records.len(),
        duration: last.t - first.t,
        rms_position: sq.map(|s| (s / n).sqrt()),
        max_position_error: max_pos,
        final_position_error: norm(position_error(last)),
        rms_yaw: (yaw_sq / n).sqrt(),
        max_yaw_error: max_yaw,
        min_tau_min: min_tau,
        max_psi_step,
        saturation_fraction: saturated as f64 / n,
    })
}

/// Largest position error over the records with `t >= t0`.
pub fn max_position_error_after(records: &[TelemetryRecord], t0: f64) -> f64 {
    records
        .iter()
        .filter(|r| r.t >= t0)
        .map(|r| norm(position_error(r)))
        .fold(0.0, f64::max)
}
