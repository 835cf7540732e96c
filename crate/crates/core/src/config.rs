//! TOML configuration with dotted `key=value` overrides.
//!
//! ```toml
//! [model]        # RobotModel fields
//! [planner.weights]
//! [planner.constraints]
//! [controller]   # ControllerConfig fields
//! [scenario]     # Scenario fields
//! ```
//!
//! Every section and field is optional; unknown keys are rejected.

use crate::control::ControllerConfig;
use crate::model::RobotModel;
use crate::planner::{PlanConstraints, PlanWeights};
use crate::sim::Scenario;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("invalid override `{0}`: {1}")]
    Override(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub weights: PlanWeights,
    pub constraints: PlanConstraints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub model: RobotModel,
    pub planner: PlannerConfig,
    pub controller: ControllerConfig,
    pub scenario: Scenario,
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `a.b.c = value` inside `table`, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let err = |m: &str| ConfigError::Override(spec.to_string(), m.to_string());
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| err("expected key=value"))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(err("empty key segment"));
    }
    let (last, parents) = path.split_last().expect("non-empty");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| err(&format!("`{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), parse_value(value.trim()));
    Ok(())
}

/// Recursively merges `top` into `base`; tables merge, other values replace.
pub fn merge_tables(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge_tables(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn read_table(path: &Path) -> Result<toml::Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_table(&text).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))
}

/// A layer holding only the `[scenario]` section.
pub fn scenario_table(scenario: &Scenario) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert(
        "scenario".into(),
        toml::Value::try_from(scenario).expect("scenario serializes"),
    );
    t
}

impl Config {
    /// Merges `layers` in order, then applies the dotted overrides.
    pub fn from_layers(
        layers: Vec<toml::Table>,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let mut table = toml::Table::new();
        for layer in layers {
            merge_tables(&mut table, layer);
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        Self::from_layers(vec![parse_table(text)?], overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        Self::from_layers(vec![read_table(path)?], overrides)
    }

    /// Defaults plus overrides, for invocations without a file.
    pub fn with_overrides(overrides: &[String]) -> Result<Self, ConfigError> {
        Self::from_toml_str("", overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::from_toml_str("", &[]).unwrap(), Config::default());
    }

    #[test]
    fn overrides_apply_after_parsing() {
        let c = Config::from_toml_str(
            "[model]\ntilt_beta = 0.2\n",
            &[
                "model.tilt_beta=0.0".into(),
                "scenario.duration = 3.5".into(),
                "scenario.name=x".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.model.tilt_beta, 0.0);
        assert_eq!(c.scenario.duration, 3.5);
        assert_eq!(c.scenario.name, "x");
    }

    #[test]
    fn later_layers_win() {
        let base = parse_table("[model]\ntilt_beta = 0.2\nlambda_max = 30.0\n").unwrap();
        let top = parse_table("[model]\ntilt_beta = 0.1\n").unwrap();
        let c = Config::from_layers(
            vec![base, scenario_table(&Scenario::circle_line()), top],
            &[],
        )
        .unwrap();
        assert_eq!(c.model.tilt_beta, 0.1);
        assert_eq!(c.model.lambda_max, 30.0);
        assert_eq!(c.scenario, Scenario::circle_line());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            Config::from_toml_str("[model]\nbogus = 1\n", &[]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            Config::with_overrides(&["planner.weights.w9=1".into()]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            Config::with_overrides(&["novalue".into()]),
            Err(ConfigError::Override(..))
        ));
    }

    #[test]
    fn round_trip() {
        let c = Config {
            scenario: Scenario::large_deformation(),
            ..Default::default()
        };
        assert_eq!(Config::from_toml_str(&c.to_toml_string(), &[]).unwrap(), c);
    }
}
