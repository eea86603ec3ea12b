//! A single worm-algorithm chain, optionally at a tuned density.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use toricloc::qmc::{
    initial_mu_guess, tune_mu, BoseModel, ObservableSet, QmcRun, QmcSchedule, TuneOptions, TunePoint, WormParams,
};
use toricloc::scaling::DISORDER_CONVENTION;
use toricloc::seed::seed_derive;

use super::{runtime, Context};
use crate::config::{require, Validate};
use crate::output::num;
use crate::CliError;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmcConfig {
    pub seed: u64,
    pub size: usize,
    pub beta: f64,
    pub hopping: f64,
    /// Offsets `ε_i` uniform on `[-delta, delta]`.
    pub delta: f64,
    /// Fixed chemical potential; exclusive with `density`.
    #[serde(default)]
    pub mu: Option<f64>,
    /// Target filling; μ is tuned to it first.
    #[serde(default)]
    pub density: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub tune: Option<QmcSchedule>,
    pub schedule: QmcSchedule,
    #[serde(default)]
    pub worm: WormParams,
    /// Sweeps between checkpoint writes.
    pub checkpoint_every: usize,
}

impl Validate for QmcConfig {
    fn validate(&self) -> Result<(), String> {
        require(self.size >= 2, "size", "the torus needs L >= 2")?;
        require(self.beta > 0.0 && self.beta.is_finite(), "beta", "must be positive")?;
        require(self.hopping >= 0.0 && self.hopping.is_finite(), "hopping", "must be >= 0")?;
        require(self.delta >= 0.0 && self.delta.is_finite(), "delta", "must be finite and >= 0")?;
        match (self.mu, self.density) {
            (Some(mu), None) => require(mu.is_finite(), "mu", "must be finite")?,
            (None, Some(n)) => {
                require(n > 0.0 && n < 1.0, "density", "must lie in (0, 1)")?;
                require(self.tolerance.is_some_and(|t| t > 0.0), "tolerance", "required and positive with density")?;
                let tune = self.tune.ok_or_else(|| "at `tune`: required with density".to_string())?;
                tune.validate().map_err(|e| format!("at `tune`: {e}"))?;
            }
            _ => return Err("at `mu`: give exactly one of mu and density".into()),
        }
        self.schedule.validate().map_err(|e| format!("at `schedule`: {e}"))?;
        self.worm.validate().map_err(|e| format!("at `worm`: {e}"))?;
        require(self.checkpoint_every >= 1, "checkpoint_every", "must be at least 1")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub tune_history: Vec<TunePoint>,
    pub run: QmcRun,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    disorder_convention: &'static str,
    disorder_seed: Option<u64>,
    chain_seed: u64,
    mu: f64,
    beta: f64,
    size: usize,
    tune_history: &'a [TunePoint],
    observables: &'a ObservableSet,
}

pub fn seeds(config: &QmcConfig) -> (Option<u64>, u64) {
    let disorder = (config.delta > 0.0).then(|| seed_derive(config.seed, 0));
    (disorder, seed_derive(config.seed, 1))
}

pub fn model(config: &QmcConfig) -> toricloc::Result<BoseModel> {
    let mu = config.mu.unwrap_or(0.0);
    let m = match seeds(config).0 {
        Some(s) => BoseModel::disordered(config.size, config.beta, mu, config.delta, s)?,
        None => BoseModel::clean(config.size, config.beta, mu)?,
    };
    let m = m.with_hopping(config.hopping);
    m.validate()?;
    Ok(m)
}

fn fresh(config: &QmcConfig) -> toricloc::Result<Checkpoint> {
    let (_, chain) = seeds(config);
    let mut m = model(config)?;
    match config.density {
        Some(n) => {
            m.mu = initial_mu_guess(&m, n);
            let opts = TuneOptions::new(config.tolerance.expect("validated"), config.tune.expect("validated"));
            let tuned = tune_mu(&m, &config.worm, n, &opts, chain)?;
            let mut run = tuned.run;
            run.restart_with_mu(tuned.mu, config.schedule)?;
            Ok(Checkpoint {
                tune_history: tuned.history,
                run,
            })
        }
        None => Ok(Checkpoint {
            tune_history: Vec::new(),
            run: QmcRun::new(m, config.worm, config.schedule, chain)?,
        }),
    }
}

fn load_checkpoint(dir: &Path, config: &QmcConfig) -> Result<Checkpoint, CliError> {
    let path = dir.join(CHECKPOINT_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Runtime(format!("cannot resume from {}: {e}", path.display())))?;
    let mut tree: Value = serde_json::from_str(&text).map_err(runtime)?;
    if let Some(obj) = tree.as_object_mut() {
        obj.remove("manifest");
    }
    let cp: Checkpoint = serde_json::from_value(tree).map_err(runtime)?;
    cp.run.validate_resumed().map_err(runtime)?;
    let (_, chain) = seeds(config);
    if cp.run.seed != chain || cp.run.schedule != config.schedule || cp.run.params != config.worm {
        return Err(CliError::Runtime("checkpoint does not belong to this configuration".into()));
    }
    let expect = model(config).map_err(runtime)?;
    if cp.run.model.offsets != expect.offsets || cp.run.model.beta != expect.beta || cp.run.model.size != expect.size {
        return Err(CliError::Runtime("checkpoint model differs from the configuration".into()));
    }
    Ok(cp)
}

pub fn run(tree: &Value, ctx: &mut Context) -> Result<(), CliError> {
    let config: QmcConfig = ctx.resolve(tree)?;
    ctx.seed = Some(config.seed);
    let (disorder_seed, chain_seed) = seeds(&config);
    ctx.derived_seeds = disorder_seed.into_iter().chain([chain_seed]).collect();
    let mut cp = if ctx.resume {
        load_checkpoint(&ctx.out_dir, &config)?
    } else {
        fresh(&config).map_err(runtime)?
    };
    let out = ctx.output()?;
    loop {
        cp.run.advance(config.checkpoint_every);
        if cp.run.is_done() {
            break;
        }
        out.json(CHECKPOINT_FILE, &cp)?;
    }
    out.json(CHECKPOINT_FILE, &cp)?;
    let obs = cp.run.observables().map_err(runtime)?;
    out.csv(
        "bins.csv",
        &["bin", "samples", "density", "energy", "winding_sq", "kinks"],
        obs.records.iter().map(|r| {
            vec![
                r.bin.to_string(),
                r.samples.to_string(),
                num(r.density),
                num(r.energy),
                num(r.winding_sq),
                num(r.kinks),
            ]
        }),
    )?;
    if let Some(sd) = &obs.site_density {
        out.csv(
            "site_density.csv",
            &["site", "x", "y", "offset", "density"],
            sd.iter().enumerate().map(|(i, d)| {
                vec![
                    i.to_string(),
                    (i % config.size).to_string(),
                    (i / config.size).to_string(),
                    num(cp.run.model.offsets[i]),
                    num(*d),
                ]
            }),
        )?;
    }
    out.json(
        "summary.json",
        &Summary {
            disorder_convention: DISORDER_CONVENTION,
            disorder_seed,
            chain_seed,
            mu: cp.run.model.mu,
            beta: config.beta,
            size: config.size,
            tune_history: &cp.tune_history,
            observables: &obs,
        },
    )
}
