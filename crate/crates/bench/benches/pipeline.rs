use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use vectorlink_bench::{hover_fixture, reference_model, FORMS};
use vectorlink_core::control::synthesize_attitude_gains;
use vectorlink_core::feasibility::tau_min_value;
use vectorlink_core::planner::optimize_vectoring;
use vectorlink_core::sim::{dynamics_step, ExternalWrench, RigidBody, RigidBodyState};
use vectorlink_core::{
    analyze, Configuration, ControllerConfig, PlanConstraints, PlanWeights, TorqueBasis,
};

fn allocation(c: &mut Criterion) {
    let model = reference_model();
    for (name, q) in FORMS {
        let form = Configuration::new(q.to_vec(), vec![0.3, -0.5, 0.7, -0.2]);
        c.bench_function(&format!("analyze/{name}"), |b| {
            b.iter(|| analyze(black_box(&model), black_box(&form)))
        });
        let basis =
            TorqueBasis::from_columns(&hover_fixture(&model, q).basis.torque, model.lambda_max);
        c.bench_function(&format!("tau_min/{name}"), |b| {
            b.iter(|| tau_min_value(black_box(&basis)))
        });
    }
}

fn planner(c: &mut Criterion) {
    let model = reference_model();
    let (w, k) = (PlanWeights::default(), PlanConstraints::default());
    let mut g = c.benchmark_group("planner");
    g.sample_size(10);
    for (name, q) in FORMS {
        g.bench_function(format!("global/{name}"), |b| {
            b.iter(|| optimize_vectoring(&model, black_box(&q), &w, &k, None))
        });
        let warm = optimize_vectoring(&model, &q, &w, &k, None)
            .unwrap()
            .psi_bar;
        let next = q.map(|x| x - 0.0125);
        g.bench_function(format!("warm/{name}"), |b| {
            b.iter(|| optimize_vectoring(&model, black_box(&next), &w, &k, Some(&warm)))
        });
    }
    g.finish();
}

fn control(c: &mut Criterion) {
    let model = reference_model();
    let weights = ControllerConfig::default().lqi;
    for (name, q) in FORMS {
        let h = hover_fixture(&model, q);
        c.bench_function(&format!("lqi_synthesis/{name}"), |b| {
            b.iter(|| {
                synthesize_attitude_gains(
                    &h.inertia_cog,
                    &h.bundle.qt,
                    &h.bundle.qr,
                    black_box(&weights),
                )
            })
        });
    }
}

fn dynamics(c: &mut Criterion) {
    let model = reference_model();
    let h = hover_fixture(&model, FORMS[0].1);
    let body = RigidBody::from_hover(&h, model.gravity);
    let state = RigidBodyState::level(Default::default(), 0.0);
    c.bench_function("rk4_step", |b| {
        b.iter_batched(
            || state,
            |s| {
                dynamics_step(
                    &s,
                    &h.bundle.lambda_s,
                    &body,
                    &ExternalWrench::default(),
                    1e-3,
                )
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, allocation, planner, control, dynamics);
criterion_main!(benches);
