//! Continuous-time algebraic Riccati equation by Newton–Kleinman iteration.

use super::ControlError;
use nalgebra::{DMatrix, DVector, Schur};

/// Solves `F X + X F^T = C` for symmetric `C` through the Kronecker form.
pub fn solve_lyapunov(f: &DMatrix<f64>, c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = f.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let k = id.kronecker(f) + f.kronecker(&id);
    let rhs = DVector::from_column_slice(c.as_slice());
    let x = k.lu().solve(&rhs)?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Some((&x + x.transpose()) * 0.5)
}

/// Hurwitz test without eigenvalues: `A` is stable iff the solution of
/// `A^T X + X A = -I` exists and is positive definite.
pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let minus_id = -DMatrix::<f64>::identity(n, n);
    solve_lyapunov(&a.transpose(), &minus_id)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .is_some_and(|x| x.cholesky().is_some())
}

/// Largest real part among the eigenvalues of `a`.
///
/// Uses a capped real Schur iteration; if that does not converge the value
/// is bracketed by bisection on the shifted Hurwitz test.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    if let Some(schur) = Schur::try_new(a.clone(), f64::EPSILON, 10_000) {
        return schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
    }
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let bound = a.norm() + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if is_hurwitz(&(a - &id * mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq)]
pub struct CareSolution {
    pub p: DMatrix<f64>,
    /// `R^-1 B^T P`.
    pub k: DMatrix<f64>,
    /// Frobenius norm of `A^T P + P A - P B R^-1 B^T P + Q`.
    pub residual: f64,
    pub iterations: usize,
}

pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r_inv: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    let res = a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q;
    res.norm()
}

/// Stabilizing gain by Bass's method: `K = B^T Z^-1` with
/// `(A + s I) Z + Z (A + s I)^T = 2 B B^T` and `s` above every eigenvalue
/// real part of `A`. Requires `(A, B)` controllable.
pub fn bass_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, ControlError> {
    let n = a.nrows();
    let shift = a.norm() + 1.0;
    let f = a + DMatrix::<f64>::identity(n, n) * shift;
    let z = solve_lyapunov(&f, &(b * b.transpose() * 2.0)).ok_or_else(|| {
        ControlError::AreFailed("Lyapunov solve for the initial gain failed".into())
    })?;
    let chol = z
        .cholesky()
        .ok_or_else(|| ControlError::AreFailed("(A, B) is not controllable".into()))?;
    Ok(b.transpose() * chol.inverse())
}

/// Solves `A^T P + P A - P B R^-1 B^T P + Q = 0` for the stabilizing `P`.
///
/// The first Newton step starts from the Bass gain; later steps are taken in
/// defect-correction form (`A_k^T X + X A_k = -Res(P)`, `P += X`), which keeps
/// the residual near round-off even when `P` is large. Stops once the
/// residual no longer decreases and returns the best iterate.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<CareSolution, ControlError> {
    let r_inv = r
        .clone()
        .cholesky()
        .ok_or_else(|| ControlError::AreFailed("input weight is not positive definite".into()))?
        .inverse();
    let k0 = bass_gain(a, b)?;
    let ak = a - b * &k0;
    if !is_hurwitz(&ak) {
        return Err(ControlError::AreFailed(
            "initial gain is not stabilizing".into(),
        ));
    }
    let mut p = solve_lyapunov(&ak.transpose(), &-(q + k0.transpose() * r * &k0))
        .ok_or_else(|| ControlError::AreFailed("singular Lyapunov system".into()))?;
    let residual_of =
        |p: &DMatrix<f64>| a.transpose() * p + p * a - p * b * &r_inv * b.transpose() * p + q;
    let mut res = residual_of(&p);
    let mut best = (res.norm(), p.clone());
    let mut iterations = 1;
    let mut stalls = 0;
    for it in 2..=80 {
        iterations = it;
        let k = &r_inv * b.transpose() * &p;
        let ak = a - b * &k;
        if !is_hurwitz(&ak) {
            return Err(ControlError::AreFailed(format!(
                "iterate {it} lost stability"
            )));
        }
        let x = solve_lyapunov(&ak.transpose(), &-&res)
            .ok_or_else(|| ControlError::AreFailed("singular Lyapunov system".into()))?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(ControlError::AreFailed("iteration diverged".into()));
        }
        p += x;
        p = (&p + p.transpose()) * 0.5;
        res = residual_of(&p);
        let norm = res.norm();
        if norm < best.0 {
            stalls = if norm > 0.5 * best.0 { stalls + 1 } else { 0 };
            best = (norm, p.clone());
        } else {
            stalls += 1;
        }
        if norm == 0.0 || stalls >= 3 {
            break;
        }
    }
    let (residual, p) = best;
    let k = &r_inv * b.transpose() * &p;
    Ok(CareSolution {
        p,
        k,
        residual,
        iterations,
    })
}
