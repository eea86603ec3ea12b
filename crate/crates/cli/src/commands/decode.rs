//! Memory experiment: create an electric pair, let it spread, measure, decode.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use toricloc::decoder::{memory_experiment, paired_significance, MemorySetup};
use toricloc::geometry::LatticeGeometry;
use toricloc::seed::seed_derive;

use super::evolve::POTENTIAL_CONVENTION;
use super::{runtime, Context};
use crate::config::{require, PerturbationConfig, Validate};
use crate::output::num;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    pub seed: u64,
    pub size: usize,
    pub t_readout: f64,
    pub trials: usize,
    /// Potential widths, one arm each; every arm shares the trial seeds.
    pub deltas: Vec<f64>,
    pub perturbation: PerturbationConfig,
}

impl Validate for DecodeConfig {
    fn validate(&self) -> Result<(), String> {
        require(self.size >= 4, "size", "the memory experiment needs L >= 4")?;
        require(self.t_readout >= 0.0 && self.t_readout.is_finite(), "t_readout", "must be >= 0")?;
        require(self.trials >= 1, "trials", "must be at least 1")?;
        require(!self.deltas.is_empty(), "deltas", "need at least one arm")?;
        require(
            self.deltas.iter().all(|d| *d >= 0.0 && d.is_finite()),
            "deltas",
            "must be finite and >= 0",
        )?;
        self.perturbation.validate("perturbation")
    }
}

#[derive(Debug, Serialize)]
struct Arm {
    delta: f64,
    trials: usize,
    failures: usize,
    rate: f64,
    stderr: f64,
    /// One-sided paired z-score for this arm failing less often than the first.
    z_vs_first: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Summary {
    potential_convention: &'static str,
    size: usize,
    t_readout: f64,
    created: (usize, usize),
    arms: Vec<Arm>,
}

pub fn run(tree: &Value, ctx: &mut Context) -> Result<(), CliError> {
    let config: DecodeConfig = ctx.resolve(tree)?;
    ctx.seed = Some(config.seed);
    ctx.derived_seeds = (0..config.trials as u64).map(|i| seed_derive(config.seed, i)).collect();
    let g = LatticeGeometry::torus(config.size).map_err(runtime)?;
    let terms = config.perturbation.terms(&g).map_err(runtime)?;
    let results = config
        .deltas
        .iter()
        .map(|&d| memory_experiment(&g, &terms, d, config.t_readout, config.trials, config.seed))
        .collect::<toricloc::Result<Vec<_>>>()
        .map_err(runtime)?;
    let arms = results
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let z = if k == 0 {
                None
            } else {
                Some(paired_significance(&results[0], r).map_err(runtime)?)
            };
            Ok(Arm {
                delta: r.delta,
                trials: r.trials,
                failures: r.failures,
                rate: r.rate,
                stderr: r.stderr,
                z_vs_first: z,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let out = ctx.output()?;
    let site = |s: usize| {
        let p = g.site(s);
        format!("{}:{}", p.x, p.y)
    };
    out.csv(
        "trials.csv",
        &["delta", "trial", "seed", "measured_a", "measured_b", "logical_x", "logical_y", "failed"],
        results.iter().flat_map(|r| {
            r.outcomes.iter().map(move |o| {
                let (x, y) = o.outcome.bits();
                vec![
                    num(r.delta),
                    o.trial.to_string(),
                    o.seed.to_string(),
                    site(o.measured.0),
                    site(o.measured.1),
                    x.to_string(),
                    y.to_string(),
                    o.failed().to_string(),
                ]
            })
        }),
    )?;
    out.json(
        "memory.json",
        &Summary {
            potential_convention: POTENTIAL_CONVENTION,
            size: config.size,
            t_readout: config.t_readout,
            created: MemorySetup::centered(&g).created,
            arms,
        },
    )
}
