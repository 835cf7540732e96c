use std::f64::consts::FRAC_PI_2;
use vectorlink_core::geometry::angle_diff;
use vectorlink_core::planner::{
    detect_corner_case, optimize_vectoring, plan_deformation, Branch, DeformationPlanner,
};
use vectorlink_core::{PlanConstraints, PlanError, PlanWeights, RobotModel, Scenario};

fn setup() -> (RobotModel, PlanWeights, PlanConstraints) {
    (
        RobotModel::default(),
        PlanWeights::default(),
        PlanConstraints::default(),
    )
}

#[test]
fn planned_forms_respect_the_constraints() {
    let (model, w, c) = setup();
    let weight = model.total_mass() * model.gravity;
    for q in [[FRAC_PI_2; 3], [0.0; 3], [0.8, -0.4, 1.2], [-1.0, 0.3, 0.6]] {
        let r = optimize_vectoring(&model, &q, &w, &c, None).unwrap();
        assert!(r.feasible);
        assert!(r.tau_min > 0.0, "q = {q:?}");
        for a in r.alpha {
            assert!(a >= c.alpha_min - c.tolerance && a <= c.alpha_max + c.tolerance);
        }
        assert!(r.lambda_s.iter().all(|l| *l > 0.0));
        // a nearly level CoG frame carries the weight almost entirely on z
        let lift: f64 = r.lambda_s.iter().sum::<f64>() * model.tilt_beta.cos();
        assert!(
            (lift / weight - 1.0).abs() < 1e-3,
            "ratio {}",
            lift / weight
        );
    }
}

#[test]
fn warm_start_stays_inside_the_continuity_box() {
    let (model, w, c) = setup();
    let first = optimize_vectoring(&model, &[FRAC_PI_2; 3], &w, &c, None).unwrap();
    let next = optimize_vectoring(&model, &[1.5, 1.5, 1.5], &w, &c, Some(&first.psi_bar)).unwrap();
    for (a, b) in first.psi_bar.iter().zip(&next.psi_bar) {
        assert!(angle_diff(*b, *a).abs() <= c.delta_psi + 1e-9, "{a} -> {b}");
    }
}

#[test]
fn planning_is_deterministic() {
    let (model, w, c) = setup();
    let q = [0.4, 0.9, -0.2];
    let a = optimize_vectoring(&model, &q, &w, &c, None).unwrap();
    let b = optimize_vectoring(&model, &q, &w, &c, None).unwrap();
    assert_eq!(a.psi_bar, b.psi_bar);
}

#[test]
fn corner_forms_are_symmetric_in_sign() {
    let (model, w, c) = setup();
    assert!(
        !detect_corner_case(&model, &[FRAC_PI_2; 3], &w, &c)
            .unwrap()
            .is_corner
    );
    for s in [0.11, -0.11] {
        let case = detect_corner_case(&model, &[s; 3], &w, &c).unwrap();
        assert!(case.is_corner, "q = {s}: {case:?}");
    }
}

#[test]
fn folding_to_line_follows_a_healthy_branch() {
    let (model, w, c) = setup();
    let trace =
        plan_deformation(&model, &Scenario::normal_to_line().planner_grid(), &w, &c).unwrap();
    assert_eq!(trace.branch, Branch::Dual);
    assert!(trace.warnings.is_empty());
    assert!(trace.min_tau() > 1.0);
    assert!(trace.max_psi_step() <= c.delta_psi + 1e-9);
}

#[test]
fn continuity_holds_on_piecewise_linear_schedules() {
    let (model, w, c) = setup();
    let targets = [[1.2, -0.5, 0.9], [-0.3, 1.0, 1.4], [0.6, 0.6, -1.1]];
    for target in targets {
        let schedule: Vec<(f64, Vec<f64>)> = (0..=20)
            .map(|k| {
                let s = k as f64 / 20.0;
                let q = (0..3)
                    .map(|j| FRAC_PI_2 + (target[j] - FRAC_PI_2) * s)
                    .collect();
                (0.05 * k as f64, q)
            })
            .collect();
        match plan_deformation(&model, &schedule, &w, &c) {
            Ok(trace) => {
                assert_eq!(trace.steps.len(), schedule.len());
                assert!(trace.max_psi_step() <= c.delta_psi + 1e-9, "{target:?}");
            }
            Err(PlanError::PlanBreak { .. }) => {}
            Err(e) => panic!("{target:?}: {e}"),
        }
    }
}

#[test]
fn unordered_schedule_is_rejected() {
    let (model, w, c) = setup();
    let schedule = vec![(0.1, vec![0.0; 3]), (0.0, vec![0.0; 3])];
    assert!(matches!(
        plan_deformation(&model, &schedule, &w, &c),
        Err(PlanError::UnorderedSchedule(_))
    ));
}

#[test]
fn incremental_planner_matches_batch_primal_start() {
    let (model, w, c) = setup();
    let mut p = DeformationPlanner::new(model.clone(), w, c);
    let first = p.step(0.0, &[FRAC_PI_2; 3]).unwrap().result.clone();
    let global = optimize_vectoring(&model, &[FRAC_PI_2; 3], &w, &c, None).unwrap();
    assert_eq!(first.psi_bar, global.psi_bar);
    let second = p.step(0.05, &[1.56, 1.56, 1.56]).unwrap();
    assert!(second.warm_started);
    assert_eq!(p.trace().steps.len(), 2);
}
