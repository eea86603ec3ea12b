//! Pauli strings on edges, perturbation terms and syndromes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LatticeGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub edge: usize,
    pub axis: Axis,
}

/// One coupling `xi * prod_k sigma^{axis_k}_{edge_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTerm")]
pub struct PerturbationTerm {
    pub coefficient: f64,
    pub support: Vec<Factor>,
}

#[derive(Deserialize)]
struct RawTerm {
    coefficient: f64,
    support: Vec<Factor>,
}

impl TryFrom<RawTerm> for PerturbationTerm {
    type Error = Error;

    fn try_from(raw: RawTerm) -> Result<Self> {
        PerturbationTerm::new(raw.coefficient, raw.support)
    }
}

impl PerturbationTerm {
    pub fn new(coefficient: f64, support: Vec<Factor>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidTerm("empty support".into()));
        }
        if !coefficient.is_finite() {
            return Err(Error::InvalidTerm(format!("coefficient {coefficient}")));
        }
        let mut edges: Vec<usize> = support.iter().map(|f| f.edge).collect();
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTerm("repeated edge in support".into()));
        }
        Ok(Self {
            coefficient,
            support,
        })
    }

    /// Product of Z on the given edges.
    pub fn z_string(coefficient: f64, edges: &[usize]) -> Result<Self> {
        Self::new(
            coefficient,
            edges.iter().map(|&edge| Factor { edge, axis: Axis::Z }).collect(),
        )
    }

    /// Product of X on the given edges.
    pub fn x_string(coefficient: f64, edges: &[usize]) -> Result<Self> {
        Self::new(
            coefficient,
            edges.iter().map(|&edge| Factor { edge, axis: Axis::X }).collect(),
        )
    }

    pub fn order(&self) -> usize {
        self.support.len()
    }

    pub fn edges(&self) -> Vec<usize> {
        self.support.iter().map(|f| f.edge).collect()
    }

    pub fn first_axis_other_than(&self, axis: Axis) -> Option<Axis> {
        self.support.iter().map(|f| f.axis).find(|&a| a != axis)
    }

    pub fn check_edges(&self, geometry: &LatticeGeometry) -> Result<()> {
        match self.support.iter().find(|f| f.edge >= geometry.num_edges()) {
            Some(f) => Err(Error::InvalidTerm(format!(
                "edge {} outside a lattice with {} edges",
                f.edge,
                geometry.num_edges()
            ))),
            None => Ok(()),
        }
    }

    /// Largest pairwise distance between edge midpoints.
    pub fn range(&self, geometry: &LatticeGeometry) -> f64 {
        let mut r: f64 = 0.0;
        for (i, a) in self.support.iter().enumerate() {
            for b in &self.support[i + 1..] {
                r = r.max(geometry.edge_distance(a.edge, b.edge));
            }
        }
        r
    }

    pub fn frame(&self, num_edges: usize) -> PauliFrame {
        let mut frame = PauliFrame::identity(num_edges);
        for f in &self.support {
            frame.apply(f.edge, f.axis);
        }
        frame
    }
}

/// A Pauli string up to phase: one X bit and one Z bit per edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliFrame {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl PauliFrame {
    pub fn identity(num_edges: usize) -> Self {
        Self {
            x: vec![false; num_edges],
            z: vec![false; num_edges],
        }
    }

    pub fn num_edges(&self) -> usize {
        self.x.len()
    }

    /// Multiply by a single-edge Pauli, dropping the phase.
    pub fn apply(&mut self, edge: usize, axis: Axis) {
        let (bx, bz) = axis.bits();
        self.x[edge] ^= bx;
        self.z[edge] ^= bz;
    }

    pub fn apply_z_string(&mut self, edges: &[usize]) {
        for &e in edges {
            self.z[e] ^= true;
        }
    }

    pub fn apply_x_string(&mut self, edges: &[usize]) {
        for &e in edges {
            self.x[e] ^= true;
        }
    }

    pub fn x_bit(&self, edge: usize) -> bool {
        self.x[edge]
    }

    pub fn z_bit(&self, edge: usize) -> bool {
        self.z[edge]
    }

    pub fn is_identity(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }

    /// Whether two Pauli strings commute (symplectic product).
    pub fn commutes_with(&self, other: &PauliFrame) -> bool {
        let mut parity = false;
        for e in 0..self.x.len() {
            parity ^= (self.x[e] & other.z[e]) ^ (self.z[e] & other.x[e]);
        }
        !parity
    }
}

/// Violated stars (electric defects) and plaquettes (magnetic defects).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Syndrome {
    pub stars: Vec<usize>,
    pub plaquettes: Vec<usize>,
}

impl Syndrome {
    pub fn is_empty(&self) -> bool {
        self.stars.is_empty() && self.plaquettes.is_empty()
    }
}

/// A star is violated when the frame anticommutes with its X-product, i.e.
/// holds an odd number of Z bits on the star's edges; plaquettes likewise with X bits.
pub fn syndrome_of(frame: &PauliFrame, geometry: &LatticeGeometry) -> Syndrome {
    let odd = |edges: [usize; 4], bits: &[bool]| edges.iter().filter(|&&e| bits[e]).count() % 2 == 1;
    Syndrome {
        stars: (0..geometry.num_stars())
            .filter(|&s| odd(geometry.star_edges(s), &frame.z))
            .collect(),
        plaquettes: (0..geometry.num_plaquettes())
            .filter(|&p| odd(geometry.plaquette_edges(p), &frame.x))
            .collect(),
    }
}
