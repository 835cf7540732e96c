//! `vectorlink` command-line front end.
//!
//! Exit status: 0 on success, 2 when the requested pipeline is infeasible or
//! aborts, 1 on usage and I/O errors.

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "vectorlink",
    version,
    about = "Multilinked aerial robot with tilted yaw-vectoring rotors"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML configuration file ([model], [planner], [controller], [scenario]).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dotted override applied after the files, e.g. `model.tilt_beta=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Scenario random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for JSON/CSV artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static hover thrust and CoG-frame allocation of one form.
    Hover(FormArgs),
    /// Guaranteed minimum control torque of one form.
    TauMin {
        #[command(flatten)]
        form: FormArgs,
        /// Also write the zonotope vertices to vertices.csv.
        #[arg(long)]
        vertices: bool,
    },
    /// Optimal vectoring angles for joint angles `q`.
    Plan {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        q: Vec<f64>,
        /// Warm start; enables the continuity bound around it.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        warm: Option<Vec<f64>>,
    },
    /// Vectoring angles along the scenario's joint schedule (plan.csv).
    PlanDeform(ScenarioArgs),
    /// Smallest rotor tilt meeting the thrust and torque bounds.
    DesignBeta {
        /// Largest allowed thrust overhead 1/cos(beta).
        #[arg(long)]
        gamma1: f64,
        /// Required line-form torque ratio.
        #[arg(long)]
        gamma2: f64,
        /// Link length, m.
        #[arg(long)]
        l: f64,
        /// CoG-to-propeller distance, m.
        #[arg(long)]
        d: f64,
    },
    /// Closed-loop simulation (telemetry.csv, metrics.json).
    Simulate(ScenarioArgs),
    /// Primal and dual tau_min over uniform joint angles (corner_scan.csv).
    CornerScan {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 31)]
        steps: usize,
    },
}

#[derive(Debug, Args)]
pub struct FormArgs {
    /// Joint angles, rad (comma separated).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub q: Vec<f64>,
    /// Vectoring angles, rad; zeros when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub psi: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file, or the name of a built-in scenario.
    #[arg(long)]
    pub scenario: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VECTORLINK_LOG", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::dispatch(&cli) {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
