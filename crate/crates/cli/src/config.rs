//! Run configuration: a strict JSON document describing one experiment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use occulp::discretize::{CostAtInf, GridSpec};
use occulp::lp::BasisSpec;
use occulp::system::{catalog, COST_NAMES};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub cost: Option<CostConfig>,
    #[serde(default)]
    pub cost_at_inf: Option<CostAtInf>,
    #[serde(default)]
    pub basis: BasisSpec,
    pub experiment: Experiment,
    #[serde(default)]
    pub schedules: Schedules,
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    /// Constant control index used by `simulate`.
    #[serde(default)]
    pub policy: Option<usize>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub truncation: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    ValueIter,
    FiniteHorizon,
    SolveLp,
    SweepAbel,
    SweepCesaro,
    SweepTruncated,
    Verify,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Simulate,
        Experiment::ValueIter,
        Experiment::FiniteHorizon,
        Experiment::SolveLp,
        Experiment::SweepAbel,
        Experiment::SweepCesaro,
        Experiment::SweepTruncated,
        Experiment::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::ValueIter => "value-iter",
            Experiment::FiniteHorizon => "finite-horizon",
            Experiment::SolveLp => "solve-lp",
            Experiment::SweepAbel => "sweep-abel",
            Experiment::SweepCesaro => "sweep-cesaro",
            Experiment::SweepTruncated => "sweep-truncated",
            Experiment::Verify => "verify",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedules {
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub horizons: Vec<usize>,
    #[serde(default)]
    pub truncation_levels: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_vi_tol")]
    pub vi_tol: f64,
    #[serde(default = "default_lp_tol")]
    pub lp_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            vi_tol: default_vi_tol(),
            lp_tol: default_lp_tol(),
        }
    }
}

fn default_vi_tol() -> f64 {
    1e-8
}

fn default_lp_tol() -> f64 {
    1e-9
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted path of the offending key, when known.
    pub path: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(path: &str, message: impl Into<String>) -> Self {
        Self {
            path: Some(path.to_string()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) if !p.is_empty() && p != "." => write!(f, "{p}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a JSON run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config = parse_document(text)?;
    config.validate()?;
    Ok(config)
}

/// Schema check only; [`RunConfig::validate`] is left to the caller.
pub fn parse_document(text: &str) -> Result<RunConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| ConfigError {
        path: Some(e.path().to_string()),
        message: e.into_inner().to_string(),
    })?;
    de.end().map_err(|e| ConfigError {
        path: None,
        message: e.to_string(),
    })?;
    Ok(config)
}

/// Pretty-printed JSON that [`parse_config`] reads back to the same value.
pub fn emit_config(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

fn strictly_increasing(values: impl IntoIterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.into_iter().collect();
    v.windows(2).all(|w| w[0] < w[1])
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let Some(entry) = catalog().iter().find(|e| e.name == self.system.name) else {
            let known: Vec<&str> = catalog().iter().map(|e| e.name).collect();
            return Err(ConfigError::at(
                "system.name",
                format!("unknown system \"{}\" (known: {})", self.system.name, known.join(", ")),
            ));
        };
        entry
            .build(&self.system.parameters)
            .map_err(|e| ConfigError::at("system.parameters", e.to_string()))?;
        self.grid.validate().map_err(|e| ConfigError::at("grid", e.to_string()))?;
        if let Some(cost) = &self.cost {
            if !COST_NAMES.contains(&cost.name.as_str()) {
                return Err(ConfigError::at(
                    "cost.name",
                    format!("unknown cost \"{}\" (known: {})", cost.name, COST_NAMES.join(", ")),
                ));
            }
            occulp::system::cost_from_catalog(&cost.name, &cost.parameters).map_err(|e| ConfigError::at("cost.parameters", e.to_string()))?;
            if let Some(m) = cost.truncation {
                if !m.is_finite() {
                    return Err(ConfigError::at("cost.truncation", "truncation level must be finite"));
                }
            }
        }
        match self.cost_at_inf {
            Some(CostAtInf::Explicit(v)) | Some(CostAtInf::TruncationLevel(v)) if !v.is_finite() => {
                return Err(ConfigError::at("cost_at_inf.value", "must be finite"));
            }
            _ => {}
        }
        if let BasisSpec::Smooth { count, width } = self.basis {
            if count == 0 || !(width > 0.0 && width.is_finite()) {
                return Err(ConfigError::at("basis", "smooth basis needs count >= 1 and a positive width"));
            }
        }
        for (i, a) in self.schedules.alphas.iter().enumerate() {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(ConfigError::at(&format!("schedules.alphas[{i}]"), format!("alpha must lie in (0,1), got {a}")));
            }
        }
        for (i, s) in self.schedules.horizons.iter().enumerate() {
            if *s == 0 {
                return Err(ConfigError::at(&format!("schedules.horizons[{i}]"), "horizon S must be positive"));
            }
        }
        for (i, m) in self.schedules.truncation_levels.iter().enumerate() {
            if !m.is_finite() {
                return Err(ConfigError::at(&format!("schedules.truncation_levels[{i}]"), "truncation level must be finite"));
            }
        }
        for (name, v) in [("tolerances.vi_tol", self.tolerances.vi_tol), ("tolerances.lp_tol", self.tolerances.lp_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::at(name, format!("tolerance must be positive, got {v}")));
            }
        }
        if let Some(y) = &self.initial_state {
            if y.len() != self.grid.dim() {
                return Err(ConfigError::at(
                    "initial_state",
                    format!("expected {} coordinates, got {}", self.grid.dim(), y.len()),
                ));
            }
        }
        self.validate_for_experiment()
    }

    fn validate_for_experiment(&self) -> Result<(), ConfigError> {
        let s = &self.schedules;
        let need = |ok: bool, path: &str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::at(path, format!("experiment {} requires {what}", self.experiment)))
            }
        };
        let increasing = |ok: bool, path: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::at(path, "sweep schedule must be strictly increasing"))
            }
        };
        match self.experiment {
            Experiment::Simulate => {
                need(self.initial_state.is_some(), "initial_state", "an initial state")?;
                need(self.policy.is_some(), "policy", "a constant control index")?;
                need(!s.horizons.is_empty(), "schedules.horizons", "at least one horizon")
            }
            Experiment::ValueIter | Experiment::Verify => need(!s.alphas.is_empty(), "schedules.alphas", "at least one discount factor"),
            Experiment::FiniteHorizon => need(!s.horizons.is_empty(), "schedules.horizons", "at least one horizon"),
            Experiment::SolveLp => Ok(()),
            Experiment::SweepAbel => {
                need(!s.alphas.is_empty(), "schedules.alphas", "at least one discount factor")?;
                increasing(strictly_increasing(s.alphas.iter().copied()), "schedules.alphas")
            }
            Experiment::SweepCesaro => {
                need(!s.horizons.is_empty(), "schedules.horizons", "at least one horizon")?;
                increasing(strictly_increasing(s.horizons.iter().map(|h| *h as f64)), "schedules.horizons")
            }
            Experiment::SweepTruncated => {
                need(!s.truncation_levels.is_empty(), "schedules.truncation_levels", "at least one truncation level")?;
                need(!s.alphas.is_empty(), "schedules.alphas", "at least one discount factor")?;
                need(!s.horizons.is_empty(), "schedules.horizons", "at least one horizon")?;
                increasing(strictly_increasing(s.truncation_levels.iter().copied()), "schedules.truncation_levels")?;
                increasing(strictly_increasing(s.alphas.iter().copied()), "schedules.alphas")?;
                increasing(strictly_increasing(s.horizons.iter().map(|h| *h as f64)), "schedules.horizons")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "system": {"name": "drift"},
        "grid": {"lower": [0], "upper": [10], "steps_per_dim": [10]},
        "experiment": "solve-lp"
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.basis, BasisSpec::Indicator);
        assert_eq!(c.tolerances.vi_tol, 1e-8);
        assert_eq!(c.tolerances.lp_tol, 1e-9);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.cost, None);
    }

    #[test]
    fn alpha_one_is_rejected() {
        let text = MINIMAL.replace("\"solve-lp\"", "\"value-iter\", \"schedules\": {\"alphas\": [0.9, 1.0]}");
        let err = parse_config(&text).unwrap_err();
        assert!(err.message.contains("alpha must lie in (0,1)"), "{err}");
        assert_eq!(err.path.as_deref(), Some("schedules.alphas[1]"));
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("\"experiment\"", "\"foo\": 1, \"experiment\"");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
        let nested = MINIMAL.replace("{\"name\": \"drift\"}", "{\"name\": \"drift\", \"bar\": 2}");
        let err = parse_config(&nested).unwrap_err();
        assert!(err.to_string().contains("bar"), "{err}");
        assert_eq!(err.path.as_deref(), Some("system.bar"));
    }

    #[test]
    fn schema_errors_carry_key_paths() {
        let text = MINIMAL.replace("\"steps_per_dim\": [10]", "\"steps_per_dim\": [\"ten\"]");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.path.as_deref(), Some("grid.steps_per_dim[0]"));
        let zero = MINIMAL.replace("\"solve-lp\"", "\"finite-horizon\", \"schedules\": {\"horizons\": [0]}");
        assert!(parse_config(&zero).unwrap_err().message.contains("positive"));
        let negative = MINIMAL.replace("\"solve-lp\"", "\"finite-horizon\", \"schedules\": {\"horizons\": [-3]}");
        assert_eq!(parse_config(&negative).unwrap_err().path.as_deref(), Some("schedules.horizons[0]"));
    }

    #[test]
    fn experiment_requirements_are_checked() {
        let text = MINIMAL.replace("\"solve-lp\"", "\"sweep-abel\"");
        assert!(parse_config(&text).unwrap_err().message.contains("requires"));
        let text = MINIMAL.replace("\"solve-lp\"", "\"sweep-abel\", \"schedules\": {\"alphas\": [0.99, 0.9]}");
        assert!(parse_config(&text).unwrap_err().message.contains("increasing"));
        let text = MINIMAL.replace("\"drift\"", "\"nope\"");
        assert_eq!(parse_config(&text).unwrap_err().path.as_deref(), Some("system.name"));
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::from_name(e.name()), Some(e));
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.name()));
        }
    }
}
