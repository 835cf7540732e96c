use crate::{Cli, Command, FormArgs, Global};
use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use vectorlink_core::allocation::rotor_wrench_basis;
use vectorlink_core::config::{read_table, scenario_table, Config};
use vectorlink_core::feasibility::{
    detect_singular_class, tau_min, tau_min_value, FeasibilityError, TorqueBasis,
};
use vectorlink_core::model::{aggregate_inertia, forward_kinematics};
use vectorlink_core::nalgebra::Matrix3xX;
use vectorlink_core::planner::{
    design_tilt_angle, detect_corner_case, optimize_vectoring, plan_deformation_partial,
};
use vectorlink_core::sim::{metrics, run_scenario, write_csv, Scenario, SimError};
use vectorlink_core::{analyze, AllocationError, Configuration, PlanError};

pub enum Status {
    Ok,
    Infeasible,
}

fn infeasible(what: &str, e: impl std::fmt::Display) -> Result<Status> {
    eprintln!("{what}: {e}");
    Ok(Status::Infeasible)
}

fn load_config(global: &Global, scenario: Option<&str>) -> Result<Config> {
    let mut layers = Vec::new();
    if let Some(path) = &global.config {
        layers.push(read_table(path)?);
    }
    if let Some(s) = scenario {
        let path = Path::new(s);
        if path.is_file() {
            layers.push(read_table(path)?);
        } else if let Some(builtin) = Scenario::builtin(s) {
            layers.push(scenario_table(&builtin));
        } else {
            bail!(
                "scenario `{s}` is neither a file nor a built-in ({})",
                Scenario::BUILTIN_NAMES.join(", ")
            );
        }
    }
    let mut overrides = global.overrides.clone();
    if let Some(seed) = global.seed {
        overrides.push(format!("scenario.seed={seed}"));
    }
    Ok(Config::from_layers(layers, &overrides)?)
}

fn artifact(global: &Global, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&global.output)
        .with_context(|| format!("cannot create {}", global.output.display()))?;
    Ok(global.output.join(name))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

fn form(config: &Config, args: &FormArgs) -> Configuration {
    let psi = args
        .psi
        .clone()
        .unwrap_or_else(|| vec![0.0; config.model.n_links]);
    Configuration::new(args.q.clone(), psi)
}

fn rows(m: &Matrix3xX<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn dispatch(cli: &Cli) -> Result<Status> {
    let g = &cli.global;
    match &cli.command {
        Command::Hover(args) => {
            let config = load_config(g, None)?;
            let form = form(&config, args);
            let h = match analyze(&config.model, &form) {
                Ok(h) => h,
                Err(AllocationError::Model(e)) => return Err(e.into()),
                Err(e) => return infeasible("hover", e),
            };
            let b = &h.bundle;
            let tau = tau_min_value(&TorqueBasis::from_columns(
                &h.basis.torque,
                config.model.lambda_max,
            ));
            write_json(
                &artifact(g, "hover.json")?,
                &json!({
                    "q": form.q,
                    "psi": form.psi,
                    "lambda_s": b.lambda_s.as_slice(),
                    "sum_lambda_s": b.lambda_s.sum(),
                    "positive_thrust": b.feasible,
                    "alpha_x": b.alpha_x,
                    "alpha_y": b.alpha_y,
                    "r_cog_c": rows(&Matrix3xX::from_column_slice(b.r_cog_c.as_slice())),
                    "qt": rows(&b.qt),
                    "qr": rows(&b.qr),
                    "inertia_cog": rows(&Matrix3xX::from_column_slice(h.inertia_cog.as_slice())),
                    "tau_min": tau,
                }),
            )?;
            println!(
                "hover: sum lambda_s = {:.4} N, alpha = ({:.4}, {:.4}) rad, tau_min = {tau:.4} N·m",
                b.lambda_s.sum(),
                b.alpha_x,
                b.alpha_y
            );
            Ok(Status::Ok)
        }
        Command::TauMin {
            form: args,
            vertices,
        } => {
            let config = load_config(g, None)?;
            let form = form(&config, args);
            let frames = forward_kinematics(&config.model, &form)?;
            let cog = aggregate_inertia(&config.model, &frames);
            let basis = TorqueBasis::from_columns(
                &rotor_wrench_basis(&frames, &config.model, &cog).torque,
                config.model.lambda_max,
            );
            let class = <[f64; 3]>::try_from(form.q.as_slice())
                .ok()
                .map(|q| detect_singular_class(&q, 1e-9));
            let report = match tau_min(&basis) {
                Ok(mut r) => {
                    r.singular_class = class;
                    json!(r)
                }
                Err(FeasibilityError::AllDegenerate) => {
                    json!({ "tau_min": 0.0, "all_degenerate": true, "singular_class": class })
                }
                Err(e) => return Err(e.into()),
            };
            write_json(&artifact(g, "tau_min.json")?, &report)?;
            if *vertices {
                let mut w = csv_writer(&artifact(g, "vertices.csv")?)?;
                w.write_record(["tau_x", "tau_y", "tau_z"])?;
                for p in basis.corner_points() {
                    w.serialize((p.x, p.y, p.z))?;
                }
                w.flush()?;
            }
            println!(
                "tau_min = {:.6} N·m",
                report["tau_min"].as_f64().unwrap_or(0.0)
            );
            Ok(Status::Ok)
        }
        Command::Plan { q, warm } => {
            let config = load_config(g, None)?;
            let p = &config.planner;
            match optimize_vectoring(
                &config.model,
                q,
                &p.weights,
                &p.constraints,
                warm.as_deref(),
            ) {
                Ok(r) => {
                    write_json(&artifact(g, "plan.json")?, &r)?;
                    println!(
                        "psi_bar = {:?} rad, tau_min = {:.4} N·m, alpha = ({:.4}, {:.4}) rad",
                        r.psi_bar
                            .iter()
                            .map(|v| (v * 1e4).round() / 1e4)
                            .collect::<Vec<_>>(),
                        r.tau_min,
                        r.alpha[0],
                        r.alpha[1]
                    );
                    Ok(Status::Ok)
                }
                Err(PlanError::Model(e)) => Err(e.into()),
                Err(e) => infeasible("plan", e),
            }
        }
        Command::PlanDeform(args) => {
            let config = load_config(g, args.scenario.as_deref())?;
            let grid = config.scenario.planner_grid();
            let p = &config.planner;
            let (trace, err) =
                match plan_deformation_partial(&config.model, &grid, &p.weights, &p.constraints) {
                    Ok(v) => v,
                    Err(e @ (PlanError::Model(_) | PlanError::UnorderedSchedule(_))) => {
                        return Err(e.into())
                    }
                    Err(e) => return infeasible("plan-deform", e),
                };
            let n = config.model.n_links;
            let mut w = csv_writer(&artifact(g, "plan.csv")?)?;
            let mut header = vec!["t".to_string()];
            header.extend((1..n).map(|i| format!("q{i}")));
            header.extend((1..=n).map(|i| format!("psi{i}")));
            header.extend(["tau_min", "alpha_x", "alpha_y", "sum_lambda_s"].map(String::from));
            w.write_record(&header)?;
            for s in &trace.steps {
                let r = &s.result;
                let mut row = vec![s.t];
                row.extend(&s.q);
                row.extend(&r.psi_bar);
                row.extend([r.tau_min, r.alpha[0], r.alpha[1], r.lambda_s.iter().sum()]);
                w.serialize(row)?;
            }
            w.flush()?;
            println!(
                "plan-deform: {} steps, {:?} branch, min tau_min {:.4} N·m, max psi step {:.4} rad, {} collapse warnings",
                trace.steps.len(),
                trace.branch,
                trace.min_tau(),
                trace.max_psi_step(),
                trace.warnings.len()
            );
            match err {
                None => Ok(Status::Ok),
                Some(e) => infeasible("plan-deform", e),
            }
        }
        Command::DesignBeta {
            gamma1,
            gamma2,
            l,
            d,
        } => match design_tilt_angle(*gamma1, *gamma2, *l, *d) {
            Ok(beta) => {
                println!("beta = {beta:.6} rad ({:.3} deg)", beta.to_degrees());
                Ok(Status::Ok)
            }
            Err(e @ PlanError::InvalidDesignInput(_)) => Err(e.into()),
            Err(e) => infeasible("design-beta", e),
        },
        Command::Simulate(args) => {
            let config = load_config(g, args.scenario.as_deref())?;
            let p = &config.planner;
            let run = match run_scenario(
                &config.model,
                &config.scenario,
                &config.controller,
                &p.weights,
                &p.constraints,
            ) {
                Ok(r) => r,
                Err(e @ (SimError::InvalidScenario(_) | SimError::Model(_))) => {
                    return Err(e.into())
                }
                Err(e) => return infeasible("simulate", e),
            };
            let f = File::create(artifact(g, "telemetry.csv")?)
                .context("cannot write telemetry.csv")?;
            write_csv(&run.telemetry, BufWriter::new(f))?;
            let m = metrics(&run.telemetry).ok();
            write_json(
                &artifact(g, "metrics.json")?,
                &json!({
                    "scenario": config.scenario.name,
                    "seed": config.scenario.seed,
                    "completed": run.completed(),
                    "abort": run.abort.as_ref().map(|e| e.to_string()),
                    "gain_updates": run.gain_updates,
                    "plan_branch": run.plan.branch,
                    "plan_warnings": run.plan.warnings,
                    "metrics": m,
                }),
            )?;
            if let Some(m) = &m {
                println!(
                    "simulate {}: {} ticks, RMS position [{:.4}, {:.4}, {:.4}] m, RMS yaw {:.4} rad, min tau_min {:.3} N·m",
                    config.scenario.name,
                    m.samples,
                    m.rms_position[0],
                    m.rms_position[1],
                    m.rms_position[2],
                    m.rms_yaw,
                    m.min_tau_min
                );
            }
            match run.abort {
                None => Ok(Status::Ok),
                Some(e) => infeasible("simulate aborted", e),
            }
        }
        Command::CornerScan { from, to, steps } => {
            if *steps < 2 {
                bail!("--steps must be at least 2");
            }
            let config = load_config(g, None)?;
            let p = &config.planner;
            let mut w = csv_writer(&artifact(g, "corner_scan.csv")?)?;
            w.write_record(["q", "tau_primal", "tau_dual", "is_corner"])?;
            let mut corners = Vec::new();
            for k in 0..*steps {
                let s = from + (to - from) * k as f64 / (*steps - 1) as f64;
                let q = vec![s; config.model.n_joints()];
                match detect_corner_case(&config.model, &q, &p.weights, &p.constraints) {
                    Ok(c) => {
                        if c.is_corner {
                            corners.push(s);
                        }
                        w.serialize((s, c.tau_primal, c.tau_dual, c.is_corner))?;
                    }
                    Err(PlanError::Model(e)) => return Err(e.into()),
                    Err(e) => {
                        log::warn!("q = {s:.4}: {e}");
                        w.serialize((s, f64::NAN, f64::NAN, false))?;
                    }
                }
            }
            w.flush()?;
            match (corners.first(), corners.last()) {
                (Some(a), Some(b)) => println!(
                    "corner-scan: {} corner forms in q = [{a:.4}, {b:.4}] rad",
                    corners.len()
                ),
                _ => println!("corner-scan: no corner forms"),
            }
            Ok(Status::Ok)
        }
    }
}
