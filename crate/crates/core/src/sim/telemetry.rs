//! Per-tick telemetry and its CSV layout.
//!
//! Columns: `t`, `x y z`, `vx vy vz`, `x_ref y_ref z_ref`, `roll pitch yaw`,
//! `yaw_ref`, `e_roll e_pitch e_yaw`, `q1..q{N-1}`, `psi1..psiN`,
//! `lambda1..lambdaN`, `lambda_s1..lambda_sN`, `tau_min`, `saturated`.

use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetryRecord {
    pub t: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub reference_position: [f64; 3],
    /// Roll, pitch, yaw of the CoG frame.
    pub attitude: [f64; 3],
    pub yaw_reference: f64,
    pub attitude_error: [f64; 3],
    pub q: Vec<f64>,
    pub psi: Vec<f64>,
    /// Commanded (clamped) thrust.
    pub lambda: Vec<f64>,
    pub lambda_s: Vec<f64>,
    pub tau_min: f64,
    /// Rotors clamped at this tick.
    pub saturated: usize,
}

pub fn csv_header(n_links: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "t", "x", "y", "z", "vx", "vy", "vz", "x_ref", "y_ref", "z_ref", "roll", "pitch", "yaw",
        "yaw_ref", "e_roll", "e_pitch", "e_yaw",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..n_links).map(|i| format!("q{i}")));
    for prefix in ["psi", "lambda", "lambda_s"] {
        h.extend((1..=n_links).map(|i| format!("{prefix}{i}")));
    }
    h.push("tau_min".into());
    h.push("saturated".into());
    h
}

/// Writes the records as CSV (header first).
pub fn write_csv<W: Write>(records: &[TelemetryRecord], out: W) -> Result<(), csv::Error> {
    let n = records.first().map_or(0, |r| r.psi.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(n))?;
    for r in records {
        let mut row: Vec<String> = Vec::with_capacity(24 + 4 * n);
        row.push(r.t.to_string());
        for v in r
            .position
            .iter()
            .chain(&r.velocity)
            .chain(&r.reference_position)
            .chain(&r.attitude)
            .chain(std::iter::once(&r.yaw_reference))
            .chain(&r.attitude_error)
            .chain(&r.q)
            .chain(&r.psi)
            .chain(&r.lambda)
            .chain(&r.lambda_s)
            .chain(std::iter::once(&r.tau_min))
        {
            row.push(v.to_string());
        }
        row.push(r.saturated.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
