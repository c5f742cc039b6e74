use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tsgan_core::data::DataConfig;
use tsgan_core::eval::{Basis, DEFAULT_HORIZONS};
use tsgan_core::training::{ForecastMode, Preset, TrainConfig};

use crate::error::CliError;

/// Horizons, weights and units used by `evaluate` and `perturb`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub horizons: Vec<usize>,
    /// Equal weights when absent.
    pub weights: Option<Vec<f64>>,
    pub basis: Basis,
    pub mode: ForecastMode,
    pub baseline: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            horizons: DEFAULT_HORIZONS.to_vec(),
            weights: None,
            basis: Basis::Scaled,
            mode: ForecastMode::Direct,
            baseline: true,
        }
    }
}

/// Everything a run depends on besides its input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

const SECTIONS: [&str; 3] = ["data", "train", "eval"];

fn overlay(base: &mut Value, user: &Value, section: &str) -> Result<(), CliError> {
    let user = user
        .as_object()
        .ok_or_else(|| CliError::Usage(format!("config section `{section}` must be a JSON object")))?;
    let target = base.as_object_mut().expect("sections serialize as objects");
    for (k, v) in user {
        target.insert(k.clone(), v.clone());
    }
    Ok(())
}

fn section<T: serde::de::DeserializeOwned>(v: Value, name: &str) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Usage(format!("config section `{name}`: {e}")))
}

/// Starts from the preset (or the plain defaults), overlays the keys present
/// in the config document, then applies the seed override.
pub fn resolve(preset: Option<Preset>, doc: Option<&str>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let base = RunConfig {
        data: DataConfig::default(),
        train: preset.map(Preset::config).unwrap_or_default(),
        eval: EvalConfig::default(),
    };
    let mut merged = match serde_json::to_value(&base) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("RunConfig serializes as an object"),
    };
    if let Some(text) = doc {
        let user: Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
        let user: Map<String, Value> = match user {
            Value::Object(m) => m,
            _ => return Err(CliError::Usage("config must be a JSON object".into())),
        };
        for (k, v) in &user {
            if !SECTIONS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown config key `{k}` (expected one of {})",
                    SECTIONS.join(", ")
                )));
            }
            overlay(merged.get_mut(k).expect("every section present"), v, k)?;
        }
    }
    let mut cfg = RunConfig {
        data: section(merged.remove("data").unwrap_or_default(), "data")?,
        train: section(merged.remove("train").unwrap_or_default(), "train")?,
        eval: section(merged.remove("eval").unwrap_or_default(), "eval")?,
    };
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    cfg.train.validate().map_err(CliError::Core)?;
    Ok(cfg)
}

pub fn load(preset: Option<Preset>, path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let text = match path {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?),
        None => None,
    };
    resolve(preset, text.as_deref(), seed)
}
