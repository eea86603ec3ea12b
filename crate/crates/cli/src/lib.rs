//! Subcommand driver: configuration, seeds, atomic outputs and manifests.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::commands::Context;
use crate::manifest::{Manifest, Status, MANIFEST_FILE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "toricloc", version, about = "Defect localization, decoding and disordered-boson experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Localization profiles of defects in a random potential.
    Evolve(CommonArgs),
    /// Escape probe for the relative motion of a defect pair.
    Relative(CommonArgs),
    /// Memory experiment with readout after coherent spreading.
    DecodeExperiment(CommonArgs),
    /// One worm-algorithm chain.
    Qmc(QmcArgs),
    /// Winding-number curves over disorder and system size.
    Scan(CommonArgs),
    /// Crossings and critical disorder from scan summaries.
    Analyze(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed, replacing `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Override a config entry, e.g. `--set protocol.realizations=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct QmcArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Continue from `checkpoint.json` in the output directory.
    #[arg(long)]
    pub resume: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evolve(_) => "evolve",
            Command::Relative(_) => "relative",
            Command::DecodeExperiment(_) => "decode-experiment",
            Command::Qmc(_) => "qmc",
            Command::Scan(_) => "scan",
            Command::Analyze(_) => "analyze",
        }
    }

    fn args(&self) -> (&CommonArgs, bool) {
        match self {
            Command::Qmc(q) => (&q.common, q.resume),
            Command::Evolve(a)
            | Command::Relative(a)
            | Command::DecodeExperiment(a)
            | Command::Scan(a)
            | Command::Analyze(a) => (a, false),
        }
    }
}

fn load_tree(name: &str, args: &CommonArgs) -> Result<Value, CliError> {
    let raw = config::read_config(&args.config, name)?;
    let mut tree = raw.tree;
    if !tree.is_object() {
        return Err(CliError::Config("config must be a table".into()));
    }
    if let Some(s) = args.seed {
        tree["seed"] = Value::from(s);
    }
    for o in &args.overrides {
        config::apply_override(&mut tree, o)?;
    }
    Ok(tree)
}

/// Run one subcommand and write its manifest; returns the exit status.
pub fn execute(cli: &Cli) -> i32 {
    let start = Instant::now();
    let name = cli.command.name();
    let (args, resume) = cli.command.args();
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut ctx = Context::new(args.out_dir.clone(), resume);
    let mut raw_tree = Value::Null;
    let result = (|| {
        if workers == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        let tree = load_tree(name, args)?;
        raw_tree = tree.clone();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        pool.install(|| commands::dispatch(name, &tree, &mut ctx))
    })();
    let (status, error) = match &result {
        Ok(()) => (Status::Ok, None),
        Err(e @ CliError::Config(_)) => (Status::ConfigError, Some(e.to_string())),
        Err(e @ CliError::Runtime(_)) => (Status::RuntimeError, Some(e.to_string())),
    };
    let manifest = Manifest {
        subcommand: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: ctx.resolved.clone().unwrap_or(raw_tree),
        master_seed: ctx.seed,
        derived_seeds: ctx.derived_seeds.clone(),
        outputs: ctx.out.as_ref().map(|o| o.written().to_vec()).unwrap_or_default(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        workers,
        status,
        error,
    };
    let code = result.as_ref().map_or_else(|e| e.exit_code(), |_| 0);
    if let Err(e) = &result {
        eprintln!("toricloc {name}: {e}");
    }
    match write_manifest(&args.out_dir, &manifest) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("toricloc {name}: cannot write manifest: {e}");
            if code == 0 {
                1
            } else {
                code
            }
        }
    }
}

fn write_manifest(dir: &std::path::Path, manifest: &Manifest) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut s = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    s.push('\n');
    output::write_atomic(dir, MANIFEST_FILE, s.as_bytes())
}
