use serde::{Deserialize, Serialize};

use super::model::BoseModel;
use super::run::{QmcRun, QmcSchedule};
use super::worm::WormParams;
use crate::error::{Error, Result};
use crate::stats::Estimate;

pub const MAX_DOUBLINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneOptions {
    pub tolerance: f64,
    /// Schedule of each trial run.
    pub schedule: QmcSchedule,
    pub max_iterations: usize,
    /// First cap on a single step in μ before the bracket closes.
    pub initial_step: f64,
}

impl TuneOptions {
    pub fn new(tolerance: f64, schedule: QmcSchedule) -> Self {
        Self {
            tolerance,
            schedule,
            max_iterations: 40,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunePoint {
    pub mu: f64,
    pub density: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub mu: f64,
    pub density: Estimate,
    pub history: Vec<TunePoint>,
    /// The chain at the tuned μ, ready to continue.
    pub run: QmcRun,
}

/// Starting point for the search: interpolates between the band edges
/// `±(4t + Δ)`.
pub fn initial_mu_guess(model: &BoseModel, target: f64) -> f64 {
    (4.0 * model.hopping + model.delta) * (2.0 * target - 1.0)
}

/// Find μ with `|<n>(μ) - target| < tolerance`, starting from `model.mu`.
///
/// Each iteration continues the same chain at the new μ. Steps are Newton
/// steps on `<n>(μ)` using the measured compressibility, kept inside the
/// bracket once one exists and bisecting otherwise; before a bracket exists
/// the step is capped and the cap doubles whenever it binds.
pub fn tune_mu(
    model: &BoseModel,
    params: &WormParams,
    target: f64,
    options: &TuneOptions,
    seed: u64,
) -> Result<TuneResult> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!("target density {target} outside (0, 1)")));
    }
    if !(options.tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let mut run = QmcRun::new(model.clone(), *params, options.schedule, seed)?;
    let mut mu = model.mu;
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    let mut cap = options.initial_step;
    let mut doublings = 0;
    let mut history = Vec::new();
    for _ in 0..options.max_iterations {
        let obs = run.run_to_end()?;
        let n = obs.density.mean;
        history.push(TunePoint {
            mu,
            density: n,
            stderr: obs.density.stderr,
        });
        if (n - target).abs() < options.tolerance {
            return Ok(TuneResult {
                mu,
                density: obs.density,
                history,
                run,
            });
        }
        if n < target {
            lo = Some(lo.map_or(mu, |l: f64| l.max(mu)));
        } else {
            hi = Some(hi.map_or(mu, |h: f64| h.min(mu)));
        }
        let kappa = obs.compressibility.mean;
        let newton = (kappa.is_finite() && kappa > 1e-9).then(|| mu + (target - n) / kappa);
        mu = match (lo, hi) {
            (Some(l), Some(h)) if l < h => match newton {
                Some(x) if x > l && x < h => x,
                _ => 0.5 * (l + h),
            },
            (Some(l), Some(h)) => {
                // Noise crossed the bracket; restart it around the midpoint.
                let m = 0.5 * (l + h);
                lo = None;
                hi = None;
                m
            }
            _ => {
                let dir = if n < target { 1.0 } else { -1.0 };
                match newton {
                    Some(x) if (x - mu).abs() <= cap => x,
                    _ => {
                        doublings += 1;
                        if doublings > MAX_DOUBLINGS {
                            return Err(Error::TuningFailed(format!(
                                "no bracket for density {target} after {MAX_DOUBLINGS} doublings (last mu {mu}, n {n})"
                            )));
                        }
                        let step = cap;
                        cap *= 2.0;
                        mu + dir * step
                    }
                }
            }
        };
        run.restart_with_mu(mu, options.schedule)?;
    }
    Err(Error::TuningFailed(format!(
        "density {target} not reached within {} iterations",
        options.max_iterations
    )))
}
