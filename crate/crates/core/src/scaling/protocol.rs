use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crossing::{
    consecutive_crossings, extrapolate_critical, BetaRule, CriticalPoint, Crossing, CurvePoint, Extrapolation,
    ScalingCurve, DISORDER_CONVENTION,
};
use crate::error::{Error, Result};
use crate::qmc::{initial_mu_guess, tune_mu, unit_disorder, BoseModel, QmcSchedule, TuneOptions, WormParams};
use crate::seed::seed_derive;
use crate::stats::{mean_and_error, Estimate};

/// Fixed-density disorder scan over several system sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanProtocol {
    pub density: f64,
    pub sizes: Vec<usize>,
    pub deltas: Vec<f64>,
    pub beta_rule: BetaRule,
    pub realizations: usize,
    /// Allowed `|<n> - density|` when tuning μ.
    pub tolerance: f64,
    pub tune: QmcSchedule,
    pub production: QmcSchedule,
    #[serde(default)]
    pub worm: WormParams,
}

impl ScanProtocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density < 1.0) {
            return Err(Error::InvalidParameter(format!("density {} outside (0, 1)", self.density)));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&l| l < 2) {
            return Err(Error::InvalidParameter("sizes must be non-empty and at least 2".into()));
        }
        if self.deltas.len() < 2 || self.deltas.windows(2).any(|w| !(w[1] > w[0])) || self.deltas[0] < 0.0 {
            return Err(Error::InvalidParameter(
                "deltas must be non-negative and strictly increasing, at least 2".into(),
            ));
        }
        if self.realizations < 2 {
            return Err(Error::InvalidParameter("need at least 2 disorder realizations".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        self.tune.validate()?;
        self.production.validate()?;
        self.worm.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRun {
    pub size: usize,
    pub beta: f64,
    pub delta: f64,
    pub realization: usize,
    pub disorder_seed: u64,
    pub chain_seed: u64,
    pub mu: f64,
    pub density: Estimate,
    pub winding_sq: Estimate,
    pub rho_s: Estimate,
    pub tune_runs: usize,
    pub thermalized: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub density: f64,
    pub beta_rule: BetaRule,
    pub disorder_convention: String,
    pub runs: Vec<RealizationRun>,
    pub curves: Vec<ScalingCurve>,
}

/// Seeds for realization `r` at size `size`: the disorder stream and the
/// chain stream for the `k`-th disorder bound.
pub fn scan_seeds(master: u64, size: usize, realization: usize, delta_index: usize) -> (u64, u64) {
    let r = seed_derive(seed_derive(master, size as u64), realization as u64);
    (seed_derive(r, 0), seed_derive(r, 1 + delta_index as u64))
}

fn one_run(p: &ScanProtocol, size: usize, realization: usize, k: usize, master: u64) -> RealizationRun {
    let delta = p.deltas[k];
    let beta = p.beta_rule.beta(size);
    let (disorder_seed, chain_seed) = scan_seeds(master, size, realization, k);
    let mut out = RealizationRun {
        size,
        beta,
        delta,
        realization,
        disorder_seed,
        chain_seed,
        mu: f64::NAN,
        density: Estimate::new(f64::NAN, f64::NAN),
        winding_sq: Estimate::new(f64::NAN, f64::NAN),
        rho_s: Estimate::new(f64::NAN, f64::NAN),
        tune_runs: 0,
        thermalized: false,
        error: None,
    };
    let result = (|| -> Result<()> {
        let u = unit_disorder(size * size, disorder_seed);
        let mut model = BoseModel::with_offsets(size, beta, 0.0, u.iter().map(|x| delta * x).collect())?;
        model.delta = delta;
        model.seed = Some(disorder_seed);
        model.mu = initial_mu_guess(&model, p.density);
        let tuned = tune_mu(&model, &p.worm, p.density, &TuneOptions::new(p.tolerance, p.tune), chain_seed)?;
        let mut run = tuned.run;
        run.restart_with_mu(tuned.mu, p.production)?;
        let obs = run.run_to_end()?;
        out.mu = tuned.mu;
        out.tune_runs = tuned.history.len();
        out.density = obs.density;
        out.winding_sq = obs.winding_sq;
        out.rho_s = obs.rho_s;
        out.thermalized = obs.thermalized;
        Ok(())
    })();
    if let Err(e) = result {
        out.error = Some(e.to_string());
    }
    out
}

/// Run every (size, realization, Δ) task and average over realizations.
/// Tasks run on the current rayon pool; results are ordered by task index.
pub fn run_scan(protocol: &ScanProtocol, seed: u64) -> Result<ScanResult> {
    protocol.validate()?;
    let tasks: Vec<(usize, usize, usize)> = protocol
        .sizes
        .iter()
        .flat_map(|&l| {
            (0..protocol.realizations).flat_map(move |r| (0..protocol.deltas.len()).map(move |k| (l, r, k)))
        })
        .collect();
    let runs: Vec<RealizationRun> = tasks
        .par_iter()
        .map(|&(l, r, k)| one_run(protocol, l, r, k, seed))
        .collect();
    let curves = curves_from_runs(protocol.density, protocol.beta_rule, &runs)?;
    Ok(ScanResult {
        density: protocol.density,
        beta_rule: protocol.beta_rule,
        disorder_convention: DISORDER_CONVENTION.into(),
        runs,
        curves,
    })
}

/// Disorder averages per (size, Δ) over the successful runs.
pub fn curves_from_runs(density: f64, beta_rule: BetaRule, runs: &[RealizationRun]) -> Result<Vec<ScalingCurve>> {
    let mut sizes: Vec<usize> = runs.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|l| {
            let mut deltas: Vec<f64> = runs.iter().filter(|r| r.size == l).map(|r| r.delta).collect();
            deltas.sort_by(f64::total_cmp);
            deltas.dedup();
            let points = deltas
                .into_iter()
                .map(|d| {
                    let w: Vec<f64> = runs
                        .iter()
                        .filter(|r| r.size == l && r.delta == d && r.error.is_none())
                        .map(|r| r.winding_sq.mean)
                        .collect();
                    let e = mean_and_error(&w);
                    CurvePoint {
                        delta: d,
                        winding_sq: e.mean,
                        stderr: if e.stderr > 0.0 { e.stderr } else { f64::MIN_POSITIVE },
                        realizations: w.len(),
                    }
                })
                .collect();
            ScalingCurve::new(l, beta_rule, density, points)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    pub resamples: usize,
    pub seed: u64,
    pub drop_smallest: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedPair {
    pub sizes: (usize, usize),
    pub error: String,
}

/// Crossings and both extrapolations for one density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityAnalysis {
    pub density: f64,
    pub crossings: Vec<Crossing>,
    pub failed_pairs: Vec<FailedPair>,
    pub constant: std::result::Result<CriticalPoint, String>,
    pub linear: std::result::Result<CriticalPoint, String>,
}

pub fn analyze_density(density: f64, curves: &[ScalingCurve], options: &AnalysisOptions) -> DensityAnalysis {
    let (crossings, failed) = consecutive_crossings(curves, options.resamples, options.seed);
    let fit = |mode| {
        extrapolate_critical(density, &crossings, mode, options.drop_smallest).map_err(|e| e.to_string())
    };
    DensityAnalysis {
        density,
        constant: fit(Extrapolation::Constant),
        linear: fit(Extrapolation::Linear),
        failed_pairs: failed
            .into_iter()
            .map(|(sizes, e)| FailedPair {
                sizes,
                error: e.to_string(),
            })
            .collect(),
        crossings,
    }
}

/// One analysis per density; failures stay local to their density.
pub fn phase_diagram(inputs: &[(f64, Vec<ScalingCurve>)], options: &AnalysisOptions) -> Result<Vec<DensityAnalysis>> {
    if let Some((n, _)) = inputs.iter().find(|(n, _)| !(*n > 0.0 && *n < 1.0)) {
        return Err(Error::InvalidParameter(format!("density {n} outside (0, 1)")));
    }
    Ok(inputs
        .par_iter()
        .enumerate()
        .map(|(k, (n, curves))| {
            let opts = AnalysisOptions {
                seed: seed_derive(options.seed, k as u64),
                ..*options
            };
            analyze_density(*n, curves, &opts)
        })
        .collect())
}
