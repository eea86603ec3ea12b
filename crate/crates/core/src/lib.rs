//! Defect dynamics, decoding and worm-algorithm Monte Carlo for the toric code
//! under coherent perturbations and quenched disorder.

pub mod decoder;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod geometry;
pub mod pauli;
pub mod propagate;
pub mod qmc;
pub mod relative_motion;
pub mod scaling;
pub mod seed;
pub mod sparse;
pub mod spin_oracle;
pub mod stats;

pub use error::{Error, Result};
pub use seed::{rng_from_seed, seed_derive, Rng};
