pub mod analyze;
pub mod decode;
pub mod evolve;
pub mod qmc;
pub mod relative;
pub mod scan;

use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use crate::config::{bind, check, Validate};
use crate::output::OutputDir;
use crate::CliError;

/// State shared between the driver and a subcommand.
#[derive(Debug)]
pub struct Context {
    pub out_dir: PathBuf,
    pub out: Option<OutputDir>,
    pub resolved: Option<Value>,
    pub seed: Option<u64>,
    pub derived_seeds: Vec<u64>,
    pub resume: bool,
}

impl Context {
    pub fn new(out_dir: PathBuf, resume: bool) -> Self {
        Self {
            out_dir,
            out: None,
            resolved: None,
            seed: None,
            derived_seeds: Vec::new(),
            resume,
        }
    }

    /// Bind and validate the config, then record it as resolved.
    pub fn resolve<T>(&mut self, tree: &Value) -> Result<T, CliError>
    where
        T: serde::de::DeserializeOwned + Serialize + Validate,
    {
        let config: T = bind(tree)?;
        check(&config)?;
        self.resolved = Some(serde_json::to_value(&config).map_err(|e| CliError::Runtime(e.to_string()))?);
        Ok(config)
    }

    /// Create the output directory; only called once the config is valid.
    pub fn output(&mut self) -> Result<&mut OutputDir, CliError> {
        if self.out.is_none() {
            self.out = Some(OutputDir::create(&self.out_dir)?);
        }
        Ok(self.out.as_mut().expect("just created"))
    }
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn dispatch(subcommand: &str, tree: &Value, ctx: &mut Context) -> Result<(), CliError> {
    if ctx.resume && subcommand != "qmc" {
        return Err(CliError::Config("--resume is only supported by `qmc`".into()));
    }
    match subcommand {
        "evolve" => evolve::run(tree, ctx),
        "relative" => relative::run(tree, ctx),
        "decode-experiment" => decode::run(tree, ctx),
        "qmc" => qmc::run(tree, ctx),
        "scan" => scan::run(tree, ctx),
        "analyze" => analyze::run(tree, ctx),
        other => Err(CliError::Config(format!("unknown subcommand `{other}`"))),
    }
}
