//! Scenario files: a pipeline name, its parameter block and run settings.

use serde::de::DeserializeOwned;
use serde_json::Value;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{path}: line {line}, column {column}: {msg}")]
    Syntax { path: String, line: usize, column: usize, msg: String },
    #[error("field `{field}`: {msg}")]
    Field { field: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

impl ConfigError {
    pub fn field(field: impl Into<String>, msg: impl ToString) -> Self {
        ConfigError::Field { field: field.into(), msg: msg.to_string() }
    }
}

pub const PIPELINES: [&str; 9] = [
    "companion-1d",
    "interior-1d",
    "sweep-1d",
    "nondegeneracy",
    "rotate-fix",
    "companion-rd",
    "interior-rd",
    "distance-demo",
    "erdos-demo",
];

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_PRECISION_BITS: u32 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub pipeline: String,
    pub params: Value,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub precision_bits: Option<u32>,
    /// directory that relative paths inside the scenario refer to
    pub base_dir: PathBuf,
}

pub fn read_json(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Syntax {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
    let v = read_json(path)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    from_value(v, base_dir)
}

pub fn from_value(v: Value, base_dir: PathBuf) -> Result<Scenario, ConfigError> {
    let Value::Object(mut m) = v else {
        return Err(ConfigError::field("<root>", "scenario must be a JSON object"));
    };
    let pipeline = match m.remove("pipeline") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(ConfigError::field("pipeline", "must be a string")),
        None => return Err(ConfigError::field("pipeline", "missing")),
    };
    if !PIPELINES.contains(&pipeline.as_str()) {
        return Err(ConfigError::field("pipeline", format!("unknown pipeline {pipeline:?}; expected one of {}", PIPELINES.join(", "))));
    }
    let params = m.remove("params").unwrap_or(Value::Object(Default::default()));
    if !params.is_object() {
        return Err(ConfigError::field("params", "must be an object"));
    }
    let output = match m.remove("output") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(base_dir.join(s)),
        Some(_) => return Err(ConfigError::field("output", "must be a string path")),
    };
    let seed = take::<u64>(&mut m, "seed")?;
    let precision_bits = take::<u32>(&mut m, "precision_bits")?;
    if let Some(k) = m.keys().next() {
        return Err(ConfigError::field(k.clone(), "unknown top-level field"));
    }
    Ok(Scenario { pipeline, params, output, seed, precision_bits, base_dir })
}

fn take<T: DeserializeOwned>(m: &mut serde_json::Map<String, Value>, key: &str) -> Result<Option<T>, ConfigError> {
    match m.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v).map(Some).map_err(|e| ConfigError::field(key, e)),
    }
}

/// Deserialize a sub-block, naming it in the error.
pub fn parse<T: DeserializeOwned>(v: &Value, field: &str) -> Result<T, ConfigError> {
    serde_json::from_value(v.clone()).map_err(|e| ConfigError::field(field, e))
}
