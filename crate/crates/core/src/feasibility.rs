//! Feasible control torque zonotope and the guaranteed minimum control torque.
//!
//! The achievable torques `{ sum_i lambda_i v_i : 0 <= lambda_i <= lambda_max }`
//! form a zonotope that always contains the origin. Its facets are spanned by
//! pairs of generators, so the radius of the largest origin-centred ball it
//! contains is the smallest support value over the pairwise cross-product
//! normals.

use nalgebra::{Matrix3xX, Vector3};
use serde::Serialize;
use thiserror::Error;

/// Pairs with `|v_i x v_j| < DEGENERACY_TOLERANCE |v_i| |v_j|` are skipped.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeasibilityError {
    #[error("need at least 3 rotors, got {0}")]
    TooFewRotors(usize),
    #[error("all torque generators are parallel; the feasible torque set is flat")]
    AllDegenerate,
}

/// Torque generated per newton of thrust by each rotor, plus the thrust limit.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueBasis {
    pub v: Vec<Vector3<f64>>,
    pub lambda_max: f64,
}

impl TorqueBasis {
    pub fn new(v: Vec<Vector3<f64>>, lambda_max: f64) -> Self {
        TorqueBasis { v, lambda_max }
    }

    pub fn from_columns(qr: &Matrix3xX<f64>, lambda_max: f64) -> Self {
        TorqueBasis {
            v: qr.column_iter().map(|c| c.into_owned()).collect(),
            lambda_max,
        }
    }

    /// Support value `h(n) = sum_k max(0, lambda_max n . v_k)`.
    pub fn support(&self, normal: &Vector3<f64>) -> f64 {
        self.v
            .iter()
            .map(|v| (self.lambda_max * normal.dot(v)).max(0.0))
            .sum()
    }

    /// All `2^N` thrust-corner torques; the zonotope is their convex hull.
    pub fn corner_points(&self) -> Vec<Vector3<f64>> {
        let n = self.v.len();
        (0u64..(1u64 << n))
            .map(|mask| {
                self.v
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .fold(Vector3::zeros(), |acc, (_, v)| acc + v * self.lambda_max)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingularClass {
    S1,
    S2,
    Both,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaceDistance {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub tau_min: f64,
    pub face_distances: Vec<FaceDistance>,
    pub degenerate_pairs: Vec<(usize, usize)>,
    /// Filled in when the report was produced for a known quad-type form.
    pub singular_class: Option<SingularClass>,
}

/// Guaranteed minimum control torque of the zonotope spanned by `basis`.
///
/// Ordered pairs are iterated so both `+n` and `-n` facets are visited.
pub fn tau_min(basis: &TorqueBasis) -> Result<FeasibilityReport, FeasibilityError> {
    let n = basis.v.len();
    if n < 3 {
        return Err(FeasibilityError::TooFewRotors(n));
    }
    let mut face_distances = Vec::with_capacity(n * (n - 1));
    let mut degenerate_pairs = Vec::new();
    let mut tau = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let cross = basis.v[i].cross(&basis.v[j]);
            let norm = cross.norm();
            if norm < DEGENERACY_TOLERANCE * basis.v[i].norm() * basis.v[j].norm() || norm == 0.0 {
                degenerate_pairs.push((i, j));
                continue;
            }
            let distance = basis.support(&(cross / norm));
            tau = tau.min(distance);
            face_distances.push(FaceDistance { i, j, distance });
        }
    }
    if face_distances.is_empty() {
        return Err(FeasibilityError::AllDegenerate);
    }
    Ok(FeasibilityReport {
        tau_min: tau.max(0.0),
        face_distances,
        degenerate_pairs,
        singular_class: None,
    })
}

/// `tau_min` collapsed to a scalar; a flat (all-degenerate) set yields 0.
pub fn tau_min_value(basis: &TorqueBasis) -> f64 {
    tau_min(basis).map_or(0.0, |r| r.tau_min)
}

/// Classifies a quad-type joint vector against the two singular families
/// of the untilted robot: `S1 = {q1 = -q3, q2 = 0}` and
/// `S2 = {q1 = -q2 = q3}` (all rotors collinear).
pub fn detect_singular_class(q: &[f64; 3], tol: f64) -> SingularClass {
    let s1 = (q[0] + q[2]).abs() <= tol && q[1].abs() <= tol;
    let s2 = (q[0] + q[1]).abs() <= tol && (q[1] + q[2]).abs() <= tol;
    match (s1, s2) {
        (true, true) => SingularClass::Both,
        (true, false) => SingularClass::S1,
        (false, true) => SingularClass::S2,
        (false, false) => SingularClass::None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn axes(lambda_max: f64) -> TorqueBasis {
        TorqueBasis::new(
            vec![
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(-1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, -1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
                Vector3::new(0.0, 0.0, -1.0),
            ],
            lambda_max,
        )
    }

    #[test]
    fn symmetric_box_radius() {
        // the zonotope is the cube [-2, 2]^3
        let r = tau_min(&axes(2.0)).unwrap();
        assert_relative_eq!(r.tau_min, 2.0, epsilon = 1e-12);
        // antiparallel pairs are degenerate
        assert_eq!(r.degenerate_pairs.len(), 6);
    }

    #[test]
    fn homogeneous_in_lambda_max() {
        let b = TorqueBasis::new(
            vec![
                Vector3::new(0.3, -0.1, 0.05),
                Vector3::new(-0.2, 0.25, -0.04),
                Vector3::new(-0.15, -0.3, 0.06),
                Vector3::new(0.1, 0.2, -0.07),
            ],
            10.0,
        );
        let a = tau_min_value(&b);
        let b2 = TorqueBasis {
            lambda_max: 20.0,
            ..b
        };
        assert_relative_eq!(tau_min_value(&b2), 2.0 * a, epsilon = 1e-12);
    }

    #[test]
    fn one_sided_generators_leave_origin_on_boundary() {
        let b = TorqueBasis::new(
            vec![
                Vector3::x(),
                Vector3::y(),
                Vector3::z(),
                Vector3::new(1.0, 1.0, 1.0),
            ],
            5.0,
        );
        assert_eq!(tau_min_value(&b), 0.0);
    }

    #[test]
    fn planar_generators_give_zero() {
        let b = TorqueBasis::new(
            vec![Vector3::x(), -Vector3::x(), Vector3::y(), -Vector3::y()],
            5.0,
        );
        assert_relative_eq!(tau_min(&b).unwrap().tau_min, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn parallel_generators_are_all_degenerate() {
        let b = TorqueBasis::new(vec![Vector3::x(), -Vector3::x(), 2.0 * Vector3::x()], 5.0);
        assert_eq!(tau_min(&b), Err(FeasibilityError::AllDegenerate));
        assert_eq!(tau_min_value(&b), 0.0);
        let b = TorqueBasis::new(vec![Vector3::x(), Vector3::y()], 5.0);
        assert_eq!(tau_min(&b), Err(FeasibilityError::TooFewRotors(2)));
    }

    #[test]
    fn corner_points_count() {
        assert_eq!(axes(1.0).corner_points().len(), 64);
    }

    #[test]
    fn singular_classes() {
        assert_eq!(
            detect_singular_class(&[-FRAC_PI_2, 0.0, FRAC_PI_2], 1e-6),
            SingularClass::S1
        );
        assert_eq!(detect_singular_class(&[0.0; 3], 1e-6), SingularClass::Both);
        assert_eq!(
            detect_singular_class(&[FRAC_PI_2; 3], 1e-6),
            SingularClass::None
        );
        assert_eq!(
            detect_singular_class(&[0.4, -0.4, 0.4], 1e-6),
            SingularClass::S2
        );
        assert_eq!(
            detect_singular_class(&[0.4, 0.0, -0.4], 1e-6),
            SingularClass::S1
        );
    }
}
