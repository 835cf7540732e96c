//! LQI attitude control with a lateral-force-suppressing input weight.
//!
//! State `x = [e_x, de_x, e_y, de_y, e_z, de_z, Ie_x, Ie_y, Ie_z]` with
//! `e = attitude_des - attitude`. The linearized model is
//! `dx/dt = A x + B lambda + D (omega x I omega)`.

use super::riccati::{solve_care, spectral_abscissa};
use super::ControlError;
use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

pub type AttitudeState = SVector<f64, 9>;

/// Rank threshold (`sigma_min / sigma_max`) for the torque allocation.
pub const QR_RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LqiWeights {
    /// Diagonal of the state weight `M`.
    pub m: [f64; 9],
    /// Diagonal of the thrust weight `W1`; a single entry is broadcast.
    pub w1: Vec<f64>,
    /// Diagonal of the lateral-force weight `W2`.
    pub w2: [f64; 3],
}

impl Default for LqiWeights {
    fn default() -> Self {
        LqiWeights {
            m: [1100.0, 80.0, 1100.0, 80.0, 100.0, 50.0, 10.0, 10.0, 0.5],
            w1: vec![1.0],
            w2: [20.0, 20.0, 20.0],
        }
    }
}

impl LqiWeights {
    pub fn validate(&self, n_rotors: usize) -> Result<(), ControlError> {
        if self.w1.len() != 1 && self.w1.len() != n_rotors {
            return Err(ControlError::InvalidWeights(format!(
                "w1 has {} entries for {n_rotors} rotors",
                self.w1.len()
            )));
        }
        if self.w1.iter().any(|w| !(*w > 0.0)) {
            return Err(ControlError::InvalidWeights("w1 must be positive".into()));
        }
        if self.m.iter().chain(&self.w2).any(|w| !(*w >= 0.0)) {
            return Err(ControlError::InvalidWeights(
                "m and w2 must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn w1_diag(&self, n: usize) -> DVector<f64> {
        if self.w1.len() == 1 {
            DVector::from_element(n, self.w1[0])
        } else {
            DVector::from_column_slice(&self.w1)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrices {
    pub a: SMatrix<f64, 9, 9>,
    /// 9 x N.
    pub b: DMatrix<f64>,
    pub d: SMatrix<f64, 9, 3>,
}

/// Sparse LQI model for inertia `inertia` and torque allocation `qr`.
pub fn build_state_matrices(
    inertia: &Matrix3<f64>,
    qr: &Matrix3xX<f64>,
) -> Result<StateMatrices, ControlError> {
    let inv = inertia.try_inverse().ok_or(ControlError::SingularInertia)?;
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for (r, c) in [(0, 1), (2, 3), (4, 5), (6, 0), (7, 2), (8, 4)] {
        a[(r, c)] = 1.0;
    }
    let iq = inv * qr;
    let mut b = DMatrix::zeros(9, qr.ncols());
    let mut d = SMatrix::<f64, 9, 3>::zeros();
    for axis in 0..3 {
        b.row_mut(2 * axis + 1).copy_from(&(-iq.row(axis)));
        d.row_mut(2 * axis + 1).copy_from(&inv.row(axis));
    }
    Ok(StateMatrices { a, b, d })
}

/// `N = W1 + Qt^T W2 Qt`.
pub fn input_weight(weights: &LqiWeights, qt: &Matrix3xX<f64>) -> DMatrix<f64> {
    let n = qt.ncols();
    let w2 = Matrix3::from_diagonal(&Vector3::from(weights.w2));
    let qt_d = DMatrix::from_column_slice(3, n, qt.as_slice());
    let lateral = qt_d.transpose() * DMatrix::from_column_slice(3, 3, w2.as_slice()) * &qt_d;
    DMatrix::from_diagonal(&weights.w1_diag(n)) + lateral
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttitudeGains {
    /// N x 9 feedback gain; the control law is `lambda = -K x + ...`.
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub residual: f64,
    /// Largest eigenvalue real part of `A - B K`.
    pub closed_loop_abscissa: f64,
}

/// LQR gain `K = N^-1 B^T P` for arbitrary `(A, B, M, N)`.
pub fn solve_lqi_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    m: &DMatrix<f64>,
    n: &DMatrix<f64>,
) -> Result<AttitudeGains, ControlError> {
    let s = solve_care(a, b, m, n)?;
    let closed_loop_abscissa = spectral_abscissa(&(a - b * &s.k));
    Ok(AttitudeGains {
        k: s.k,
        p: s.p,
        residual: s.residual,
        closed_loop_abscissa,
    })
}

/// Attitude gains for a form with CoG-frame inertia and allocation.
pub fn synthesize_attitude_gains(
    inertia: &Matrix3<f64>,
    qt: &Matrix3xX<f64>,
    qr: &Matrix3xX<f64>,
    weights: &LqiWeights,
) -> Result<AttitudeGains, ControlError> {
    weights.validate(qt.ncols())?;
    let sm = build_state_matrices(inertia, qr)?;
    let a = DMatrix::from_column_slice(9, 9, sm.a.as_slice());
    let m = DMatrix::from_diagonal(&DVector::from_column_slice(&weights.m));
    solve_lqi_gain(&a, &sm.b, &m, &input_weight(weights, qt))
}

/// Moore–Penrose inverse of a full-row-rank torque allocation.
pub fn torque_pseudo_inverse(qr: &Matrix3xX<f64>) -> Result<DMatrix<f64>, ControlError> {
    let q = DMatrix::from_column_slice(3, qr.ncols(), qr.as_slice());
    let svd = q.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let ratio = if s_max > 0.0 { s_min / s_max } else { 0.0 };
    if qr.ncols() < 3 || ratio < QR_RANK_TOLERANCE {
        return Err(ControlError::RankDeficientQr { ratio });
    }
    svd.pseudo_inverse(0.0)
        .map_err(|_| ControlError::RankDeficientQr { ratio })
}

/// `lambda_att = -K x + Qr^+ (omega x I omega)`.
pub fn attitude_control(
    x: &AttitudeState,
    omega: &Vector3<f64>,
    inertia: &Matrix3<f64>,
    qr_pinv: &DMatrix<f64>,
    gains: &AttitudeGains,
) -> DVector<f64> {
    let gyro = omega.cross(&(inertia * omega));
    let feedback = -(&gains.k * DVector::from_column_slice(x.as_slice()));
    feedback + qr_pinv * DVector::from_column_slice(gyro.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sparsity_pattern() {
        let qr = Matrix3xX::from_column_slice(&[
            1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        ]);
        let sm = build_state_matrices(&Matrix3::identity(), &qr).unwrap();
        assert_eq!(sm.a.iter().filter(|v| **v != 0.0).count(), 6);
        assert!(sm.a.iter().all(|v| *v == 0.0 || *v == 1.0));
        for axis in 0..3 {
            for j in 0..4 {
                assert_eq!(sm.b[(2 * axis + 1, j)], -qr[(axis, j)]);
                assert_eq!(sm.b[(2 * axis, j)], 0.0);
            }
        }
        assert_eq!(sm.d[(1, 0)], 1.0);
    }

    #[test]
    fn singular_inertia_rejected() {
        let qr = Matrix3xX::zeros(4);
        assert_eq!(
            build_state_matrices(&Matrix3::zeros(), &qr),
            Err(ControlError::SingularInertia)
        );
    }

    #[test]
    fn double_integrator_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let g = solve_lqi_gain(&a, &b, &DMatrix::identity(2, 2), &DMatrix::identity(1, 1)).unwrap();
        assert_relative_eq!(g.k[(0, 0)], 1.0, epsilon = 1e-10);
        assert_relative_eq!(g.k[(0, 1)], 3f64.sqrt(), epsilon = 1e-10);
        assert!(g.closed_loop_abscissa < 0.0);
    }

    #[test]
    fn flat_allocation_is_rank_deficient() {
        let qr = Matrix3xX::from_column_slice(&[
            1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0,
        ]);
        assert!(matches!(
            torque_pseudo_inverse(&qr),
            Err(ControlError::RankDeficientQr { .. })
        ));
    }

    #[test]
    fn broadcast_w1_matches_explicit() {
        let qt = Matrix3xX::from_fn(4, |i, j| (i + 2 * j) as f64 * 0.1);
        let a = input_weight(&LqiWeights::default(), &qt);
        let b = input_weight(
            &LqiWeights {
                w1: vec![1.0; 4],
                ..Default::default()
            },
            &qt,
        );
        assert_eq!(a, b);
        assert!(LqiWeights::default().validate(4).is_ok());
        assert!(LqiWeights {
            w1: vec![1.0; 3],
            ..Default::default()
        }
        .validate(4)
        .is_err());
    }
}
