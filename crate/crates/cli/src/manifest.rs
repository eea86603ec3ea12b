use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record tying a run's outputs to its exact inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    /// Fully resolved configuration; feed the manifest back with `--config`
    /// to reproduce the run.
    pub config: Value,
    pub master_seed: Option<u64>,
    pub derived_seeds: Vec<u64>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    pub workers: usize,
    pub status: Status,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ConfigError,
    RuntimeError,
}
