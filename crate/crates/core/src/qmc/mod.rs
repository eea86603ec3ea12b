//! Continuous-time worm-algorithm Monte Carlo for disordered hard-core bosons.

mod model;
mod run;
mod tune;
mod worm;

pub use model::{unit_disorder, BoseModel};
pub use run::{
    run_qmc, Acceptance, BinAccumulator, BinRecord, ObservableSet, QmcRun, QmcSchedule, CHECKPOINT_VERSION,
    MIN_BINS,
};
pub use tune::{initial_mu_guess, tune_mu, TuneOptions, TunePoint, TuneResult, MAX_DOUBLINGS};
pub use worm::{Event, EventKind, Move, MoveStats, WormEnd, WormParams, WormState};
