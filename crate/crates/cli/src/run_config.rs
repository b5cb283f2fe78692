//! Flat JSON run configuration: every [`TrainConfig`] key plus the dataset
//! path, output directory and checkpoint interval. Keys left out take the
//! values of the selected `scale` preset; unknown keys are rejected.

use std::path::{Path, PathBuf};

use adaptive_hash_core::config::ScalePreset;
use adaptive_hash_core::TrainConfig;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const DEFAULT_CHECKPOINT_INTERVAL: u64 = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub dataset: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub checkpoint_interval: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            dataset: None,
            out_dir: PathBuf::from("run"),
            checkpoint_interval: DEFAULT_CHECKPOINT_INTERVAL,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(config_err)?;
        let Value::Object(map) = value else {
            return Err(CliError::Config("run configuration must be a JSON object".into()));
        };
        Self::from_map(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn from_map(mut map: Map<String, Value>) -> Result<Self> {
        let mut take_str = |key: &str| -> Result<Option<String>> {
            match map.remove(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s)),
                Some(other) => Err(CliError::Config(format!("'{key}' must be a string, got {other}"))),
            }
        };
        let dataset = take_str("dataset")?.map(PathBuf::from);
        let out_dir = take_str("out_dir")?.map_or_else(|| PathBuf::from("run"), PathBuf::from);
        let checkpoint_interval = match map.remove("checkpoint_interval") {
            None => DEFAULT_CHECKPOINT_INTERVAL,
            Some(v) => v
                .as_u64()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Config(format!("'checkpoint_interval' must be a positive integer, got {v}")))?,
        };
        let scale: ScalePreset = match map.get("scale") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| config_err(format!("scale: {e}")))?,
            None => ScalePreset::Desk,
        };
        let Value::Object(mut merged) = serde_json::to_value(TrainConfig::preset(scale)).map_err(config_err)? else {
            unreachable!("TrainConfig serializes to an object");
        };
        merged.extend(map);
        let train: TrainConfig = serde_json::from_value(Value::Object(merged)).map_err(config_err)?;
        train.validate()?;
        Ok(Self {
            train,
            dataset,
            out_dir,
            checkpoint_interval,
        })
    }

    pub fn to_map(&self) -> Map<String, Value> {
        let Value::Object(mut map) = serde_json::to_value(&self.train).expect("config serializes") else {
            unreachable!("TrainConfig serializes to an object");
        };
        if let Some(d) = &self.dataset {
            map.insert("dataset".into(), Value::String(d.display().to_string()));
        }
        map.insert("out_dir".into(), Value::String(self.out_dir.display().to_string()));
        map.insert("checkpoint_interval".into(), Value::from(self.checkpoint_interval));
        map
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&Value::Object(self.to_map())).expect("config serializes");
        s.push('\n');
        s
    }

    /// Sets one key; `value` is read as JSON, falling back to a plain string.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        let mut map = self.to_map();
        map.insert(key.to_string(), v);
        *self = Self::from_map(map)?;
        Ok(())
    }
}
