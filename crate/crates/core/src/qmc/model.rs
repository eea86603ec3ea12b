use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, LatticeGeometry};
use crate::seed::rng_from_seed;

/// Hard-core bosons on the L x L torus,
/// `H = -t Σ_i Σ_d b†_{i+d} b_i - Σ_i (μ - ε_i) n_i`
/// with `d` running over the four lattice directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoseModel {
    pub size: usize,
    pub hopping: f64,
    pub mu: f64,
    pub beta: f64,
    /// Disorder bound; offsets lie in `[-delta, delta]`.
    pub delta: f64,
    /// Seed of the offset field, if drawn from one.
    pub seed: Option<u64>,
    pub offsets: Vec<f64>,
}

/// Unit-interval disorder `u_i` uniform on `[-1, 1]`; offsets are `Δ u_i`.
pub fn unit_disorder(num_sites: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..num_sites).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()
}

impl BoseModel {
    pub fn clean(size: usize, beta: f64, mu: f64) -> Result<Self> {
        Self::with_offsets(size, beta, mu, vec![0.0; size * size])
    }

    /// Offsets `ε_i` iid uniform on `[-delta, delta]` drawn from `seed`.
    pub fn disordered(size: usize, beta: f64, mu: f64, delta: f64, seed: u64) -> Result<Self> {
        let u = unit_disorder(size * size, seed);
        let mut m = Self::with_offsets(size, beta, mu, u.iter().map(|x| delta * x).collect())?;
        m.delta = delta;
        m.seed = Some(seed);
        Ok(m)
    }

    pub fn with_offsets(size: usize, beta: f64, mu: f64, offsets: Vec<f64>) -> Result<Self> {
        let delta = offsets.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        let m = Self {
            size,
            hopping: 1.0,
            mu,
            beta,
            delta,
            seed: None,
            offsets,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_hopping(mut self, hopping: f64) -> Self {
        self.hopping = hopping;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(Error::InvalidSize(self.size));
        }
        if self.offsets.len() != self.num_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.num_sites(),
                got: self.offsets.len(),
            });
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.hopping >= 0.0 && self.hopping.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hopping must be non-negative, got {}",
                self.hopping
            )));
        }
        if !self.mu.is_finite() || self.offsets.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("non-finite chemical potential or offset".into()));
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        self.size * self.size
    }

    /// `μ - ε_i`, the weight per unit imaginary time of an occupied site.
    pub fn site_field(&self, site: usize) -> f64 {
        self.mu - self.offsets[site]
    }

    /// `table[i][d]` is the neighbour of `i` in `Direction::ALL[d]`.
    pub fn neighbor_table(&self) -> Vec<[u32; 4]> {
        let g = LatticeGeometry::torus(self.size).expect("validated size");
        (0..self.num_sites())
            .map(|i| Direction::ALL.map(|d| g.neighbor(i, d) as u32))
            .collect()
    }
}
