use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use vectorlink_core::allocation::rotor_wrench_basis;
use vectorlink_core::feasibility::{tau_min_value, TorqueBasis};
use vectorlink_core::model::{aggregate_inertia, forward_kinematics};
use vectorlink_core::{analyze, Configuration, RobotModel};

fn joints() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-FRAC_PI_2..FRAC_PI_2, 3)
}

fn vectoring() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-PI..PI, 4)
}

fn torque_basis(model: &RobotModel, form: &Configuration) -> TorqueBasis {
    let frames = forward_kinematics(model, form).unwrap();
    let cog = aggregate_inertia(model, &frames);
    TorqueBasis::from_columns(
        &rotor_wrench_basis(&frames, model, &cog).torque,
        model.lambda_max,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rotor_frames_are_rotations(q in joints(), psi in vectoring(), beta in 0.0..0.6f64) {
        let model = RobotModel::quad(beta);
        let frames = forward_kinematics(&model, &Configuration::new(q, psi)).unwrap();
        for pose in frames.rotors.iter().chain(&frames.links) {
            let r = pose.rotation;
            prop_assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
        for i in 0..4 {
            let tilt = frames.thrust_axis(i).z.clamp(-1.0, 1.0).acos();
            prop_assert!((tilt - beta).abs() < 1e-9);
        }
    }

    #[test]
    fn hover_thrust_balances_weight(q in joints(), psi in vectoring(), beta in 0.1..0.6f64) {
        let model = RobotModel::quad(beta);
        let Ok(h) = analyze(&model, &Configuration::new(q, psi)) else {
            return Ok(());
        };
        let b = &h.bundle;
        let force = &b.qt * &b.lambda_s;
        let torque = &b.qr * &b.lambda_s;
        let weight = model.total_mass() * model.gravity;
        prop_assert!((force - Vector3::new(0.0, 0.0, weight)).norm() < 1e-8 * weight);
        prop_assert!(torque.norm() < 1e-8 * weight);
    }

    #[test]
    fn tau_min_is_rotation_invariant_and_homogeneous(
        q in joints(),
        psi in vectoring(),
        axis in prop::array::uniform3(-1.0..1.0f64),
        angle in -PI..PI,
        scale in 0.1..10.0f64,
    ) {
        let model = RobotModel::quad(0.34);
        let basis = torque_basis(&model, &Configuration::new(q, psi));
        let tau = tau_min_value(&basis);
        let axis = Vector3::from(axis);
        prop_assume!(axis.norm() > 1e-3);
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        let rotated = TorqueBasis::new(basis.v.iter().map(|v| r * v).collect(), basis.lambda_max);
        prop_assert!((tau_min_value(&rotated) - tau).abs() < 1e-9 * (1.0 + tau));
        let scaled = TorqueBasis::new(basis.v.clone(), basis.lambda_max * scale);
        prop_assert!((tau_min_value(&scaled) - scale * tau).abs() < 1e-9 * (1.0 + scale * tau));
    }

    #[test]
    fn singular_forms_without_tilt_have_no_guaranteed_torque(
        s in 0.05..FRAC_PI_2,
        sign in prop::bool::ANY,
        psi in vectoring(),
    ) {
        let model = RobotModel::quad(0.0);
        let s = if sign { s } else { -s };
        for q in [vec![s, -s, s], vec![s, 0.0, -s], vec![0.0; 3]] {
            let tau = tau_min_value(&torque_basis(&model, &Configuration::new(q, psi.clone())));
            prop_assert!(tau.abs() < 1e-9, "tau = {tau}");
        }
    }

    #[test]
    fn principal_moments_satisfy_triangle_inequality(q in joints(), psi in vectoring()) {
        let model = RobotModel::quad(0.34);
        let frames = forward_kinematics(&model, &Configuration::new(q, psi)).unwrap();
        let inertia = aggregate_inertia(&model, &frames).inertia;
        prop_assert!((inertia - inertia.transpose()).norm() < 1e-12);
        let e = inertia.symmetric_eigenvalues();
        for i in 0..3 {
            prop_assert!(e[i] > 0.0);
            prop_assert!(e[i] <= e[(i + 1) % 3] + e[(i + 2) % 3] + 1e-12);
        }
    }

    #[test]
    fn cog_geometry_ignores_link_numbering(q in joints()) {
        let model = RobotModel::quad(0.34);
        let reversed: Vec<f64> = q.iter().rev().map(|x| -x).collect();
        let distances = |q: Vec<f64>| {
            let frames = forward_kinematics(&model, &Configuration::new(q, vec![0.0; 4])).unwrap();
            let cog = aggregate_inertia(&model, &frames).cog_origin;
            let mut d: Vec<f64> = frames.rotors.iter().map(|r| (r.translation - cog).norm()).collect();
            d.sort_by(f64::total_cmp);
            d
        };
        for (a, b) in distances(q).iter().zip(distances(reversed)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
