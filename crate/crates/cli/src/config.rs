//! Experiment configs: a JSON file with the subcommand name and its
//! parameters, overlaid by whatever flags were given on the command line.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Schema, parameter or I/O problem; exit 2.
    Config(String),
    /// Numerical guard tripped; exit 3.
    Numeric(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<simplex_lab::Error> for Failure {
    fn from(e: simplex_lab::Error) -> Self {
        use simplex_lab::Error::*;
        match e {
            NumericGuard(_) | Indeterminate(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(format!("csv: {e}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub check: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }
}

/// Flag values that were given, as a JSON object without nulls.
pub fn given_flags(args: &impl Serialize) -> Map<String, Value> {
    match serde_json::to_value(args) {
        Ok(Value::Object(m)) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// File parameters overlaid by flags, validated against `T`'s schema.
pub fn resolve<T: DeserializeOwned>(file: Option<&Map<String, Value>>, flags: Map<String, Value>) -> Result<T, Failure> {
    let mut merged = file.cloned().unwrap_or_default();
    merged.extend(flags);
    serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::Config(format!("params: {e}")))
}

/// SHA-256 of the compact JSON of `{subcommand, params}`.
pub fn config_hash(subcommand: &str, params: &Value) -> String {
    let canonical = serde_json::json!({ "subcommand": subcommand, "params": params });
    format!("{:x}", Sha256::digest(canonical.to_string().as_bytes()))
}
