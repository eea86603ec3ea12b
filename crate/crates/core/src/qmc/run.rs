use serde::{Deserialize, Serialize};

use super::model::BoseModel;
use super::worm::{Move, MoveStats, WormParams, WormState};
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};
use crate::stats::{jackknife, mean_and_error, Estimate};

pub const MIN_BINS: usize = 32;
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmcSchedule {
    pub thermalization: usize,
    pub sweeps: usize,
    pub bins: usize,
    /// Update attempts per sweep; `ceil(N β)` when unset.
    #[serde(default)]
    pub updates_per_sweep: Option<usize>,
    /// Record time-averaged per-site occupations at sweep ends.
    #[serde(default)]
    pub site_densities: bool,
}

impl QmcSchedule {
    pub fn new(thermalization: usize, sweeps: usize, bins: usize) -> Self {
        Self {
            thermalization,
            sweeps,
            bins,
            updates_per_sweep: None,
            site_densities: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < MIN_BINS || self.sweeps < self.bins {
            return Err(Error::InvalidParameter(format!(
                "need sweeps >= bins >= {MIN_BINS}, got {} sweeps and {} bins",
                self.sweeps, self.bins
            )));
        }
        if self.updates_per_sweep == Some(0) {
            return Err(Error::InvalidParameter("updates_per_sweep must be positive".into()));
        }
        Ok(())
    }

    pub fn updates_for(&self, model: &BoseModel) -> usize {
        self.updates_per_sweep
            .unwrap_or_else(|| ((model.num_sites() as f64 * model.beta).ceil() as usize).max(1))
    }
}

/// Sums over closed-sector visits within one bin.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BinAccumulator {
    pub samples: u64,
    pub density: f64,
    pub particles_sq: f64,
    pub energy: f64,
    pub winding_sq: f64,
    pub kinks: f64,
}

/// Per-bin averages, written as the sweep-resolved output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRecord {
    pub bin: usize,
    pub samples: u64,
    pub density: f64,
    pub energy: f64,
    pub winding_sq: f64,
    pub kinks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub open: f64,
    pub close: f64,
    pub insert: f64,
    pub remove: f64,
    /// Fraction of update steps spent in the closed sector.
    pub closed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub density: Estimate,
    /// `<H>` including the chemical-potential term.
    pub energy: Estimate,
    pub winding_sq: Estimate,
    /// `<W²> / (2β)`.
    pub rho_s: Estimate,
    /// `β (<N²> - <N>²) / N`.
    pub compressibility: Estimate,
    pub mean_kinks: Estimate,
    pub bins: usize,
    pub sweeps: usize,
    pub samples: u64,
    pub acceptance: Acceptance,
    pub thermalized: bool,
    pub warnings: Vec<String>,
    /// Time-averaged occupation per site, when requested.
    pub site_density: Option<Vec<f64>>,
    pub records: Vec<BinRecord>,
}

/// A Monte Carlo chain with everything needed to resume it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QmcRun {
    pub version: u32,
    pub model: BoseModel,
    pub params: WormParams,
    pub schedule: QmcSchedule,
    pub seed: u64,
    state: WormState,
    rng: Rng,
    thermalized_sweeps: usize,
    measured_sweeps: usize,
    bins: Vec<BinAccumulator>,
    stats: MoveStats,
    steps: u64,
    closed_steps: u64,
    site_sums: Vec<f64>,
    site_samples: u64,
}

impl QmcRun {
    pub fn new(model: BoseModel, params: WormParams, schedule: QmcSchedule, seed: u64) -> Result<Self> {
        model.validate()?;
        params.validate()?;
        schedule.validate()?;
        let state = WormState::empty(&model);
        Ok(Self {
            version: CHECKPOINT_VERSION,
            bins: vec![BinAccumulator::default(); schedule.bins],
            site_sums: vec![0.0; model.num_sites()],
            model,
            params,
            schedule,
            seed,
            state,
            rng: rng_from_seed(seed),
            thermalized_sweeps: 0,
            measured_sweeps: 0,
            stats: MoveStats::default(),
            steps: 0,
            closed_steps: 0,
            site_samples: 0,
        })
    }

    /// Check a deserialized run before resuming it.
    pub fn validate_resumed(&self) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        self.model.validate()?;
        self.schedule.validate()?;
        if self.bins.len() != self.schedule.bins || self.site_sums.len() != self.model.num_sites() {
            return Err(Error::Checkpoint("accumulator sizes do not match the schedule".into()));
        }
        self.state
            .check_invariants(&self.model)
            .map_err(|e| Error::Checkpoint(format!("inconsistent configuration: {e}")))
    }

    pub fn state(&self) -> &WormState {
        &self.state
    }

    pub fn sweeps_done(&self) -> usize {
        self.thermalized_sweeps + self.measured_sweeps
    }

    pub fn is_done(&self) -> bool {
        self.measured_sweeps >= self.schedule.sweeps
    }

    /// Change the chemical potential and clear all measurements; the
    /// configuration is kept.
    pub fn restart_with_mu(&mut self, mu: f64, schedule: QmcSchedule) -> Result<()> {
        schedule.validate()?;
        self.model.mu = mu;
        self.model.validate()?;
        self.state.recompute(&self.model);
        self.schedule = schedule;
        self.thermalized_sweeps = 0;
        self.measured_sweeps = 0;
        self.bins = vec![BinAccumulator::default(); schedule.bins];
        self.site_sums = vec![0.0; self.model.num_sites()];
        self.site_samples = 0;
        self.stats = MoveStats::default();
        self.steps = 0;
        self.closed_steps = 0;
        Ok(())
    }

    /// Run up to `max_sweeps` further sweeps; returns the number performed.
    pub fn advance(&mut self, max_sweeps: usize) -> usize {
        let neighbors = self.model.neighbor_table();
        let eta = self.params.eta_for(&self.model);
        let updates = self.schedule.updates_for(&self.model);
        let beta = self.model.beta;
        let n_sites = self.model.num_sites() as f64;
        let mut done = 0;
        while done < max_sweeps && !self.is_done() {
            let measuring = self.thermalized_sweeps >= self.schedule.thermalization;
            let bin = if measuring {
                Some(self.measured_sweeps * self.schedule.bins / self.schedule.sweeps)
            } else {
                None
            };
            for _ in 0..updates {
                self.state
                    .update(&self.model, &self.params, eta, &neighbors, &mut self.rng, &mut self.stats);
                if let Some(b) = bin {
                    self.steps += 1;
                    if self.state.is_closed() {
                        self.closed_steps += 1;
                        let acc = &mut self.bins[b];
                        let n = self.state.particles() as f64;
                        let w = self.state.winding().expect("closed");
                        acc.samples += 1;
                        acc.density += n / n_sites;
                        acc.particles_sq += n * n;
                        acc.energy += -(self.state.action() + self.state.kinks() as f64) / beta;
                        acc.winding_sq += (w[0] * w[0] + w[1] * w[1]) as f64;
                        acc.kinks += self.state.kinks() as f64;
                    }
                }
            }
            // Remove accumulated rounding in the cached action.
            self.state.recompute(&self.model);
            if measuring {
                if self.schedule.site_densities && self.state.is_closed() {
                    for (s, t) in self.site_sums.iter_mut().zip(self.state.occupied_time()) {
                        *s += t / beta;
                    }
                    self.site_samples += 1;
                }
                self.measured_sweeps += 1;
            } else {
                self.thermalized_sweeps += 1;
            }
            done += 1;
        }
        done
    }

    /// Finish the remaining sweeps and reduce the bins.
    pub fn run_to_end(&mut self) -> Result<ObservableSet> {
        while !self.is_done() {
            self.advance(usize::MAX);
        }
        self.observables()
    }

    pub fn observables(&self) -> Result<ObservableSet> {
        if !self.is_done() {
            return Err(Error::InsufficientData("run has not finished its sweeps".into()));
        }
        let used: Vec<&BinAccumulator> = self.bins.iter().filter(|b| b.samples > 0).collect();
        if used.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "only {} bins visited the closed sector",
                used.len()
            )));
        }
        let beta = self.model.beta;
        let n_sites = self.model.num_sites() as f64;
        let means: Vec<Vec<f64>> = used
            .iter()
            .map(|b| {
                let s = b.samples as f64;
                vec![b.density / s, b.particles_sq / s, b.energy / s, b.winding_sq / s, b.kinks / s]
            })
            .collect();
        let col = |k: usize| -> Vec<f64> { means.iter().map(|m| m[k]).collect() };
        let density = mean_and_error(&col(0));
        let energy = mean_and_error(&col(2));
        let winding_sq = mean_and_error(&col(3));
        let mean_kinks = mean_and_error(&col(4));
        let rho_s = jackknife(&means, |m| m[3] / (2.0 * beta));
        let compressibility = jackknife(&means, |m| {
            let n = m[0] * n_sites;
            beta * (m[1] - n * n) / n_sites
        });

        let mut warnings = Vec::new();
        let half = used.len() / 2;
        for (name, k) in [("density", 0usize), ("energy", 2)] {
            let c = col(k);
            let (a, b) = (mean_and_error(&c[..half]), mean_and_error(&c[half..]));
            let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            if sigma > 0.0 && (a.mean - b.mean).abs() > 3.0 * sigma {
                warnings.push(format!(
                    "{name} not thermalized: halves {:.6} and {:.6} differ by more than 3 sigma",
                    a.mean, b.mean
                ));
            }
        }
        if used.len() < self.bins.len() {
            warnings.push(format!(
                "{} of {} bins never visited the closed sector",
                self.bins.len() - used.len(),
                self.bins.len()
            ));
        }
        let records = self
            .bins
            .iter()
            .enumerate()
            .filter(|(_, b)| b.samples > 0)
            .map(|(bin, b)| {
                let s = b.samples as f64;
                BinRecord {
                    bin,
                    samples: b.samples,
                    density: b.density / s,
                    energy: b.energy / s,
                    winding_sq: b.winding_sq / s,
                    kinks: b.kinks / s,
                }
            })
            .collect();
        let acc = |m: Move| self.stats.acceptance(m);
        Ok(ObservableSet {
            density,
            energy,
            winding_sq,
            rho_s,
            compressibility,
            mean_kinks,
            bins: used.len(),
            sweeps: self.measured_sweeps,
            samples: used.iter().map(|b| b.samples).sum(),
            acceptance: Acceptance {
                open: acc(Move::Open),
                close: acc(Move::Close),
                insert: acc(Move::Insert),
                remove: acc(Move::Remove),
                closed_fraction: if self.steps == 0 {
                    0.0
                } else {
                    self.closed_steps as f64 / self.steps as f64
                },
            },
            thermalized: warnings.iter().all(|w| !w.contains("not thermalized")),
            warnings,
            site_density: (self.schedule.site_densities && self.site_samples > 0)
                .then(|| self.site_sums.iter().map(|s| s / self.site_samples as f64).collect()),
            records,
        })
    }
}

/// Thermalize, measure and reduce in one call.
pub fn run_qmc(model: &BoseModel, params: &WormParams, schedule: &QmcSchedule, seed: u64) -> Result<ObservableSet> {
    QmcRun::new(model.clone(), *params, *schedule, seed)?.run_to_end()
}
