//! Thrust-to-wrench allocation, static hovering thrust and the orientation of
//! the CoG frame that levels the robot in ideal hover.

use crate::geometry::{rot_x, rot_y, skew};
use crate::model::{
    aggregate_inertia, forward_kinematics, Configuration, FrameSet, InertiaSummary, ModelError,
    RobotModel,
};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector3};
use thiserror::Error;

/// Ratio of smallest to largest singular value below which the stacked
/// z-force/torque system is treated as singular.
pub const RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("allocation is singular (sigma_min/sigma_max = {ratio:.3e})")]
    SingularAllocation { ratio: f64 },
    #[error("static thrust resultant vanishes")]
    ZeroForce,
}

/// Force and torque allocation matrices, one column per rotor.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchBasis {
    /// Unit-thrust force directions.
    pub force: Matrix3xX<f64>,
    /// Torque per unit thrust about the CoG.
    pub torque: Matrix3xX<f64>,
}

/// Solution of the relaxed hover problem in the candidate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticThrust {
    /// Thrust producing 1 N along z of `{C}` with zero torque.
    pub lambda_unit: DVector<f64>,
    /// Thrust whose resultant has magnitude `m g`, N.
    pub lambda_s: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CogOrientation {
    pub alpha_x: f64,
    pub alpha_y: f64,
    /// `{CoG}R{C} = Ry(alpha_y) Rx(alpha_x)`.
    pub rotation: Matrix3<f64>,
}

/// Allocation expressed in the CoG frame together with the hover thrust.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationBundle {
    pub qt: Matrix3xX<f64>,
    pub qr: Matrix3xX<f64>,
    pub lambda_s: DVector<f64>,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub r_cog_c: Matrix3<f64>,
    /// All static thrusts strictly positive.
    pub feasible: bool,
}

/// Columns of `Q'_t` and `Q'_r` in the candidate frame `{C}` (axes of `{L1}`,
/// origin at the CoG). Torque column `i` is `(p_i^ + kappa_i I) R_i b3`.
pub fn rotor_wrench_basis(
    frames: &FrameSet,
    model: &RobotModel,
    cog: &InertiaSummary,
) -> WrenchBasis {
    let n = frames.rotors.len();
    let mut force = Matrix3xX::zeros(n);
    let mut torque = Matrix3xX::zeros(n);
    for (i, rotor) in frames.rotors.iter().enumerate() {
        let axis = rotor.rotation.column(2).into_owned();
        let arm = rotor.translation - cog.cog_origin;
        let t = (skew(&arm) + Matrix3::identity() * model.drag_ratio[i]) * axis;
        force.set_column(i, &axis);
        torque.set_column(i, &t);
    }
    WrenchBasis { force, torque }
}

/// Solves `[Q'_tz; Q'_r] lambda' = e1` and rescales to carry the full weight.
///
/// For more than four rotors the minimum-norm solution is used.
pub fn solve_static_thrust(
    basis: &WrenchBasis,
    model: &RobotModel,
) -> Result<StaticThrust, AllocationError> {
    let n = basis.force.ncols();
    let mut stacked = DMatrix::zeros(4, n);
    stacked.row_mut(0).copy_from(&basis.force.row(2));
    stacked.view_mut((1, 0), (3, n)).copy_from(&basis.torque);

    let svd = stacked.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = if n >= 4 {
        svd.singular_values.min()
    } else {
        0.0
    };
    let ratio = if s_max > 0.0 { s_min / s_max } else { 0.0 };
    if n < 4 || ratio < RANK_TOLERANCE {
        return Err(AllocationError::SingularAllocation { ratio });
    }
    let rhs = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
    let lambda_unit = if n == 4 {
        stacked
            .lu()
            .solve(&rhs)
            .ok_or(AllocationError::SingularAllocation { ratio })?
    } else {
        svd.solve(&rhs, 0.0)
            .map_err(|_| AllocationError::SingularAllocation { ratio })?
    };
    let resultant = &basis.force * &lambda_unit;
    let norm = resultant.norm();
    if norm < 1e-12 {
        return Err(AllocationError::ZeroForce);
    }
    let weight = model.total_mass() * model.gravity;
    let lambda_s = &lambda_unit * (weight / norm);
    Ok(StaticThrust {
        lambda_unit,
        lambda_s,
    })
}

/// Roll/pitch that rotate the hover resultant `f` onto +z.
pub fn cog_orientation(f: &Vector3<f64>) -> Result<CogOrientation, AllocationError> {
    if f.norm() < 1e-12 {
        return Err(AllocationError::ZeroForce);
    }
    let alpha_x = f.y.atan2(f.z);
    let alpha_y = (-f.x).atan2(f.y.hypot(f.z));
    Ok(CogOrientation {
        alpha_x,
        alpha_y,
        rotation: rot_y(alpha_y) * rot_x(alpha_x),
    })
}

/// Rotates the candidate-frame allocation into `{CoG}`.
pub fn allocation_in_cog(
    basis: &WrenchBasis,
    orientation: &CogOrientation,
    lambda_s: &DVector<f64>,
) -> AllocationBundle {
    let r = orientation.rotation;
    AllocationBundle {
        qt: r * &basis.force,
        qr: r * &basis.torque,
        lambda_s: lambda_s.clone(),
        alpha_x: orientation.alpha_x,
        alpha_y: orientation.alpha_y,
        r_cog_c: r,
        feasible: lambda_s.iter().all(|l| *l > 0.0),
    }
}

/// Everything the controller and planner need about one form `(q, psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoverModel {
    pub frames: FrameSet,
    pub inertia: InertiaSummary,
    /// Allocation in the candidate frame `{C}`.
    pub basis: WrenchBasis,
    pub bundle: AllocationBundle,
    /// Inertia about the CoG expressed in `{CoG}`.
    pub inertia_cog: Matrix3<f64>,
}

impl HoverModel {
    pub fn total_mass(&self) -> f64 {
        self.inertia.total_mass
    }
}

/// Runs kinematics, inertia aggregation and the full allocation pipeline.
pub fn analyze(model: &RobotModel, config: &Configuration) -> Result<HoverModel, AllocationError> {
    let frames = forward_kinematics(model, config)?;
    let inertia = aggregate_inertia(model, &frames);
    let basis = rotor_wrench_basis(&frames, model, &inertia);
    let thrust = solve_static_thrust(&basis, model)?;
    let f = &basis.force * &thrust.lambda_s;
    let orientation = cog_orientation(&Vector3::new(f[0], f[1], f[2]))?;
    let bundle = allocation_in_cog(&basis, &orientation, &thrust.lambda_s);
    let inertia_cog = inertia.rotated(&bundle.r_cog_c);
    Ok(HoverModel {
        frames,
        inertia,
        basis,
        bundle,
        inertia_cog,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn hover(beta: f64, q: [f64; 3], psi: [f64; 4]) -> Result<HoverModel, AllocationError> {
        analyze(
            &RobotModel::quad(beta),
            &Configuration::new(q.to_vec(), psi.to_vec()),
        )
    }

    #[test]
    fn untilted_columns_are_vertical() {
        let h = hover(0.0, [0.3, 1.0, -0.5], [0.4, 2.0, -1.0, 3.0]).unwrap();
        for c in h.basis.force.column_iter() {
            assert_relative_eq!(c.into_owned(), Vector3::z(), epsilon = 1e-15);
        }
        // planar: only the third row of Qt is non-zero, and the frame is level
        assert_relative_eq!(h.bundle.qt.row(0).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(h.bundle.qt.row(1).norm(), 0.0, epsilon = 1e-15);
        assert_eq!((h.bundle.alpha_x, h.bundle.alpha_y), (0.0, 0.0));
    }

    #[test]
    fn symmetric_square_shares_weight_equally() {
        let h = hover(0.0, [PI / 2.0; 3], [0.0; 4]).unwrap();
        let each = 4.7 * 9.80665 / 4.0;
        for l in h.bundle.lambda_s.iter() {
            assert_relative_eq!(*l, each, epsilon = 1e-9);
        }
    }

    #[test]
    fn untilted_line_is_singular() {
        let err = hover(0.0, [0.0; 3], [0.0; 4]).unwrap_err();
        assert!(matches!(err, AllocationError::SingularAllocation { .. }));
    }

    #[test]
    fn hover_identity_holds() {
        let h = hover(0.34, [0.7, -0.2, 1.3], [0.5, -2.0, 2.7, 1.1]).unwrap();
        let m_g = 4.7 * 9.80665;
        let f = &h.bundle.qt * &h.bundle.lambda_s;
        let t = &h.bundle.qr * &h.bundle.lambda_s;
        assert_relative_eq!(f, nalgebra::Vector3::new(0.0, 0.0, m_g), epsilon = 1e-9);
        assert_relative_eq!(t.norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn cog_orientation_levels_force() {
        let o = cog_orientation(&Vector3::new(0.0, 0.0, 46.1)).unwrap();
        assert_eq!((o.alpha_x, o.alpha_y), (0.0, 0.0));
        assert_relative_eq!(o.rotation, Matrix3::identity());

        let theta: f64 = 0.2;
        let o = cog_orientation(&Vector3::new(0.0, 30.0 * theta.tan(), 30.0)).unwrap();
        assert_relative_eq!(o.alpha_x, theta, epsilon = 1e-14);
        assert_relative_eq!(o.alpha_y, 0.0);

        let f = Vector3::new(3.0, -2.0, 40.0);
        let o = cog_orientation(&f).unwrap();
        assert_relative_eq!(
            o.rotation * f,
            Vector3::new(0.0, 0.0, f.norm()),
            epsilon = 1e-10
        );
        let again = cog_orientation(&(o.rotation * f)).unwrap();
        assert_relative_eq!(again.rotation, Matrix3::identity(), epsilon = 1e-12);

        assert_eq!(
            cog_orientation(&Vector3::zeros()),
            Err(AllocationError::ZeroForce)
        );
    }

    #[test]
    fn minimum_norm_for_six_links() {
        let model = RobotModel::chain(6, 0.34);
        let cfg = Configuration::new(
            vec![0.6, 0.4, -0.3, 0.8, 0.5],
            vec![0.1, 1.0, -2.0, 0.3, 2.2, -0.9],
        );
        let h = analyze(&model, &cfg).unwrap();
        let f = &h.bundle.qt * &h.bundle.lambda_s;
        let t = &h.bundle.qr * &h.bundle.lambda_s;
        assert_relative_eq!(f.z, model.total_mass() * model.gravity, epsilon = 1e-9);
        assert_relative_eq!(f.xy().norm(), 0.0, epsilon = 1e-9);
        assert_relative_eq!(t.norm(), 0.0, epsilon = 1e-9);
    }
}
