//! Run manifests and output writers.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub source: String,
    pub sha256: String,
    pub n_values: usize,
}

impl InputDigest {
    pub fn new(source: &str, bytes: &[u8], n_values: usize) -> Self {
        Self {
            source: source.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            n_values,
        }
    }
}

/// Everything needed to repeat a run. Worker count is left out on purpose:
/// outputs do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub seeds: Value,
    pub input: Option<InputDigest>,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, seeds: Value, input: Option<InputDigest>) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds,
            input,
        }
    }
}

pub fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("plain data serializes")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write_text(path, &text)
}
