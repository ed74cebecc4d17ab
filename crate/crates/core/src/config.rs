//! The single structured run configuration.
//!
//! Loaded from TOML; every key has a default and unknown keys are rejected.
//! Values can be overridden with `section.key=value` pairs or environment
//! variables named `FREEFLIGHT__SECTION__KEY`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::evaluation::EvaluationConfig;
use crate::geometry::AirspaceConfig;
use crate::neural::NetworkConfig;
use crate::observation::ObservationScales;
use crate::reward::RewardConfig;
use crate::schedule::TrafficConfig;
use crate::training::TrainingConfig;

pub const ENV_PREFIX: &str = "FREEFLIGHT__";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreeflightConfig {
    pub seed: u64,
    pub airspace: AirspaceConfig,
    pub traffic: TrafficConfig,
    pub observation: ObservationScales,
    pub reward: RewardConfig,
    pub network: NetworkConfig,
    pub training: TrainingConfig,
    pub evaluation: EvaluationConfig,
}

impl FreeflightConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.airspace.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.training.curriculum.validate().map_err(ConfigError::Invalid)?;
        if self.network.hidden == 0 {
            return invalid("network.hidden must be positive".into());
        }
        let t = &self.training;
        if t.batch_size == 0 || t.buffer_capacity == 0 {
            return invalid("training.batch_size and training.buffer_capacity must be positive".into());
        }
        if !(0.0..=1.0).contains(&t.td3.gamma) || !(0.0..=1.0).contains(&t.td3.tau) {
            return invalid("training.td3.gamma and training.td3.tau must lie in [0, 1]".into());
        }
        if t.td3.policy_delay == 0 {
            return invalid("training.td3.policy_delay must be positive".into());
        }
        if t.episode.max_steps == 0 || t.episode.explore_sigma < 0.0 {
            return invalid("training.episode needs max_steps > 0 and explore_sigma >= 0".into());
        }
        if !(0.0..1.0).contains(&t.smoothing) {
            return invalid("training.smoothing must lie in [0, 1)".into());
        }
        let tr = &self.traffic;
        if !(tr.speed_min > 0.0 && tr.speed_min <= tr.speed_max) {
            return invalid("traffic speeds must satisfy 0 < speed_min <= speed_max".into());
        }
        if tr.poisson_lambda < 0.0 {
            return invalid("traffic.poisson_lambda must be non-negative".into());
        }
        let e = &self.evaluation;
        if e.kde_cells == 0 || e.kde_max <= e.kde_min {
            return invalid("evaluation KDE grid is empty".into());
        }
        if e.noise_sigmas.iter().any(|s| s.is_nan() || *s < 0.0) {
            return invalid("evaluation.noise_sigmas must be non-negative".into());
        }
        Ok(())
    }

    /// Applies `section.key=value`; the value is parsed as a TOML value and
    /// falls back to a plain string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Override(assignment.into()))?;
        let path: Vec<&str> = key.trim().split('.').map(str::trim).collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(ConfigError::Override(assignment.into()));
        }
        let value = parse_value(value.trim());
        let mut root = toml::Value::try_from(&*self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut slot = &mut root;
        for (i, part) in path.iter().enumerate() {
            let table = slot.as_table_mut().ok_or_else(|| ConfigError::Invalid(format!("`{}` is not a section", path[..i].join("."))))?;
            if i + 1 == path.len() {
                table.insert((*part).to_string(), value);
                break;
            }
            slot = table.entry((*part).to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        let updated: Self = root.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(format!("{key}: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    /// Applies `FREEFLIGHT__SECTION__KEY=value` variables in sorted order.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<(), ConfigError> {
        let mut found: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|rest| (rest.split("__").map(str::to_lowercase).collect::<Vec<_>>().join("."), v)))
            .collect();
        found.sort();
        for (key, value) in found {
            self.apply_override(&format!("{key}={value}"))?;
        }
        Ok(())
    }
}

fn parse_value(text: &str) -> toml::Value {
    let doc = format!("v = {text}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}
