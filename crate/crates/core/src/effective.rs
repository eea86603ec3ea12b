//! Defect-level hopping Hamiltonians.
//!
//! A Z-only term (electric sector) or X-only term (magnetic sector) with
//! boundary `B` maps a configuration `c` to `c Δ B`. The move is kept when the
//! defect number is unchanged; coefficients of all terms realizing the same
//! move add up. Terms with empty boundary shift every diagonal entry.
//! The diagonal potential is `λ Σ_{s ∈ c} 2 J(s)`.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, LatticePath, PathKind};
use crate::pauli::{Axis, PerturbationTerm};
use crate::seed::rng_from_seed;
use crate::sparse::SparseHermitian;
use crate::spin_oracle::combinations;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectType {
    Electric,
    Magnetic,
}

impl DefectType {
    pub fn axis(self) -> Axis {
        match self {
            DefectType::Electric => Axis::Z,
            DefectType::Magnetic => Axis::X,
        }
    }

    pub fn path_kind(self) -> PathKind {
        match self {
            DefectType::Electric => PathKind::Primal,
            DefectType::Magnetic => PathKind::Dual,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DefectType::Electric => "electric",
            DefectType::Magnetic => "magnetic",
        }
    }
}

/// Star couplings `J_e` and plaquette couplings `J_m`, iid uniform on
/// `[lower, upper]`, drawn from one ChaCha8 stream (stars first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDisorder")]
pub struct DisorderField {
    pub j_e: Vec<f64>,
    pub j_m: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub strength: f64,
    pub seed: u64,
}

#[derive(Deserialize)]
struct RawDisorder {
    j_e: Vec<f64>,
    j_m: Vec<f64>,
    lower: f64,
    upper: f64,
    strength: f64,
    seed: u64,
}

impl TryFrom<RawDisorder> for DisorderField {
    type Error = Error;

    fn try_from(r: RawDisorder) -> Result<Self> {
        let field = DisorderField {
            j_e: r.j_e,
            j_m: r.j_m,
            lower: r.lower,
            upper: r.upper,
            strength: r.strength,
            seed: r.seed,
        };
        field.validate()?;
        Ok(field)
    }
}

impl DisorderField {
    pub fn uniform(geometry: &LatticeGeometry, lower: f64, upper: f64, strength: f64, seed: u64) -> Result<Self> {
        if !(lower > 0.0 && upper >= lower && upper.is_finite()) {
            return Err(Error::InvalidDisorder(format!(
                "need 0 < lower <= upper, got [{lower}, {upper}]"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| lower + (upper - lower) * rng.random::<f64>())
                .collect()
        };
        let j_e = draw(geometry.num_stars());
        let j_m = draw(geometry.num_plaquettes());
        Ok(Self {
            j_e,
            j_m,
            lower,
            upper,
            strength,
            seed,
        })
    }

    /// Couplings on `[1, 1 + Δ/2]` with λ = 1, so that the single-defect
    /// potential `2J` is uniform on an interval of width Δ.
    pub fn for_potential_width(geometry: &LatticeGeometry, delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidDisorder(format!("negative width {delta}")));
        }
        Self::uniform(geometry, 1.0, 1.0 + 0.5 * delta, 1.0, seed)
    }

    /// Unit couplings with zero strength.
    pub fn clean(geometry: &LatticeGeometry) -> Self {
        Self {
            j_e: vec![1.0; geometry.num_stars()],
            j_m: vec![1.0; geometry.num_plaquettes()],
            lower: 1.0,
            upper: 1.0,
            strength: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(j) = self.j_e.iter().chain(&self.j_m).find(|&&j| !(j > 0.0 && j.is_finite())) {
            return Err(Error::InvalidDisorder(format!("non-positive coupling {j}")));
        }
        if !self.strength.is_finite() {
            return Err(Error::InvalidDisorder("strength must be finite".into()));
        }
        Ok(())
    }

    fn couplings(&self, defect_type: DefectType) -> &[f64] {
        match defect_type {
            DefectType::Electric => &self.j_e,
            DefectType::Magnetic => &self.j_m,
        }
    }

    /// Single-defect potential `λ · 2J(site)`.
    pub fn potential(&self, defect_type: DefectType, site: usize) -> f64 {
        self.strength * 2.0 * self.couplings(defect_type)[site]
    }
}

/// Sorted, strictly increasing defect positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DefectConfiguration(Vec<usize>);

impl DefectConfiguration {
    pub fn new(mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "defects must sit on distinct sites: {sites:?}"
            )));
        }
        Ok(Self(sites))
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One term's contribution `H[to, from] += coefficient`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub from: usize,
    pub to: usize,
    pub coefficient: f64,
    pub term: usize,
}

#[derive(Debug, Clone)]
pub struct HoppingHamiltonian {
    size: usize,
    defect_type: DefectType,
    n_defects: usize,
    basis: Vec<DefectConfiguration>,
    index: HashMap<Vec<usize>, usize>,
    contributions: Vec<Contribution>,
    closed_terms: Vec<(usize, f64)>,
    potential: Vec<f64>,
    term_edges: Vec<Vec<usize>>,
    term_signs: Vec<f64>,
}

pub fn build_defect_hamiltonian(
    geometry: &LatticeGeometry,
    terms: &[PerturbationTerm],
    disorder: &DisorderField,
    n_defects: usize,
    defect_type: DefectType,
) -> Result<HoppingHamiltonian> {
    HoppingHamiltonian::build(geometry, terms, disorder, n_defects, defect_type)
}

impl HoppingHamiltonian {
    pub fn build(
        geometry: &LatticeGeometry,
        terms: &[PerturbationTerm],
        disorder: &DisorderField,
        n_defects: usize,
        defect_type: DefectType,
    ) -> Result<Self> {
        let sites = geometry.num_stars();
        if n_defects == 0 || n_defects > sites {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= n_defects <= {sites}, got {n_defects}"
            )));
        }
        disorder.validate()?;
        if disorder.j_e.len() != geometry.num_stars() || disorder.j_m.len() != geometry.num_plaquettes() {
            return Err(Error::InvalidDisorder(format!(
                "field sized {}/{} for a lattice with {} sites",
                disorder.j_e.len(),
                disorder.j_m.len(),
                sites
            )));
        }
        let kind = defect_type.path_kind();
        let mut boundaries = Vec::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            t.check_edges(geometry)?;
            if let Some(axis) = t.first_axis_other_than(defect_type.axis()) {
                return Err(Error::AxisMismatch {
                    term: i,
                    axis: axis.symbol(),
                    sector: defect_type.name(),
                });
            }
            boundaries.push(geometry.boundary(kind, &t.edges()));
        }

        let basis: Vec<DefectConfiguration> = combinations(sites, n_defects)
            .into_iter()
            .map(DefectConfiguration)
            .collect();
        let index: HashMap<Vec<usize>, usize> = basis
            .iter()
            .enumerate()
            .map(|(i, c)| (c.0.clone(), i))
            .collect();

        let mut by_site: Vec<Vec<usize>> = vec![Vec::new(); sites];
        let mut closed_terms = Vec::new();
        for (t, b) in boundaries.iter().enumerate() {
            if b.is_empty() {
                closed_terms.push((t, terms[t].coefficient));
            } else if b.len() <= 2 * n_defects {
                for &s in b {
                    by_site[s].push(t);
                }
            }
        }

        let mut contributions = Vec::new();
        let mut candidates = Vec::new();
        let mut moved = Vec::with_capacity(n_defects + 4);
        for (from, c) in basis.iter().enumerate() {
            candidates.clear();
            for &s in &c.0 {
                candidates.extend_from_slice(&by_site[s]);
            }
            candidates.sort_unstable();
            candidates.dedup();
            for &t in &candidates {
                symmetric_difference(&c.0, &boundaries[t], &mut moved);
                if moved.len() != n_defects {
                    continue;
                }
                let to = index[&moved];
                contributions.push(Contribution {
                    from,
                    to,
                    coefficient: terms[t].coefficient,
                    term: t,
                });
            }
        }

        let potential = basis
            .iter()
            .map(|c| c.0.iter().map(|&s| disorder.potential(defect_type, s)).sum())
            .collect();
        let term_edges = terms
            .iter()
            .map(|t| {
                let mut e = t.edges();
                e.sort_unstable();
                e
            })
            .collect();
        Ok(Self {
            size: geometry.size(),
            defect_type,
            n_defects,
            basis,
            index,
            contributions,
            closed_terms,
            potential,
            term_edges,
            term_signs: vec![1.0; terms.len()],
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn defect_type(&self) -> DefectType {
        self.defect_type
    }

    pub fn n_defects(&self) -> usize {
        self.n_defects
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DefectConfiguration] {
        &self.basis
    }

    pub fn index_of(&self, sites: &[usize]) -> Result<usize> {
        let mut key = sites.to_vec();
        key.sort_unstable();
        self.index
            .get(&key)
            .copied()
            .ok_or(Error::UnknownConfiguration(key))
    }

    pub fn contributions(&self) -> &[Contribution] {
        &self.contributions
    }

    /// Diagonal potential without the closed-term shift.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Braiding sign currently attached to each term.
    pub fn term_signs(&self) -> &[f64] {
        &self.term_signs
    }

    pub fn diagonal_shift(&self) -> f64 {
        self.closed_terms
            .iter()
            .map(|&(t, c)| c * self.term_signs[t])
            .sum()
    }

    /// Aggregated off-diagonal amplitudes `(to, from, value)`.
    pub fn hopping_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut map: HashMap<(usize, usize), f64> = HashMap::new();
        for c in &self.contributions {
            *map.entry((c.to, c.from)).or_insert(0.0) += c.coefficient * self.term_signs[c.term];
        }
        let mut out: Vec<_> = map.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        out.sort_by_key(|&(r, c, _)| (r, c));
        out
    }

    pub fn to_sparse(&self) -> SparseHermitian {
        let shift = self.diagonal_shift();
        let mut t: Vec<(usize, usize, Complex64)> = self
            .contributions
            .iter()
            .map(|c| {
                (
                    c.to,
                    c.from,
                    Complex64::new(c.coefficient * self.term_signs[c.term], 0.0),
                )
            })
            .collect();
        t.extend(
            self.potential
                .iter()
                .enumerate()
                .map(|(i, &v)| (i, i, Complex64::new(v + shift, 0.0))),
        );
        SparseHermitian::from_triplets(self.dim(), &t).expect("indices come from the basis")
    }

    /// Negate every term whose support crosses the dual string an odd number
    /// of times: the phase a single electric defect picks up when hopping
    /// across the creation string of a static magnetic pair.
    pub fn attach_braiding_string(&self, string: &LatticePath) -> Result<Self> {
        if self.n_defects != 1 || self.defect_type != DefectType::Electric {
            return Err(Error::UnsupportedSector(format!(
                "braiding needs one dynamic electric defect, have {} {}",
                self.n_defects,
                self.defect_type.name()
            )));
        }
        if string.kind != PathKind::Dual {
            return Err(Error::InvalidParameter(
                "braiding string must live on the dual lattice".into(),
            ));
        }
        let mut crossed = std::collections::HashSet::new();
        for &e in &string.edges {
            if !crossed.insert(e) {
                crossed.remove(&e);
            }
        }
        let mut out = self.clone();
        for (sign, edges) in out.term_signs.iter_mut().zip(&self.term_edges) {
            if edges.iter().filter(|e| crossed.contains(e)).count() % 2 == 1 {
                *sign = -*sign;
            }
        }
        Ok(out)
    }
}

fn symmetric_difference(a: &[usize], b: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// `η̃ Σ_j σ_j · B`: one single-edge term per edge and nonzero field component.
pub fn field_preset(geometry: &LatticeGeometry, eta_tilde: f64, field: [f64; 3]) -> Vec<PerturbationTerm> {
    let mut terms = Vec::new();
    for edge in 0..geometry.num_edges() {
        for (axis, b) in [Axis::X, Axis::Y, Axis::Z].into_iter().zip(field) {
            if b != 0.0 {
                terms.push(
                    PerturbationTerm::new(eta_tilde * b, vec![crate::pauli::Factor { edge, axis }])
                        .expect("single-edge term"),
                );
            }
        }
    }
    terms
}

/// ZZ part of the in-plane dipole coupling truncated at distance `cutoff`:
/// `2η / r³` per unordered edge pair (both orders of the double sum).
pub fn dipolar_preset(geometry: &LatticeGeometry, eta: f64, cutoff: f64) -> Result<Vec<PerturbationTerm>> {
    if !(cutoff >= 1.0) {
        return Err(Error::InvalidParameter(format!("dipolar cutoff {cutoff} < 1")));
    }
    let mut terms = Vec::new();
    for a in 0..geometry.num_edges() {
        for b in a + 1..geometry.num_edges() {
            let r = geometry.edge_distance(a, b);
            if r > 0.0 && r <= cutoff + 1e-9 {
                terms.push(PerturbationTerm::z_string(2.0 * eta / (r * r * r), &[a, b])?);
            }
        }
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_torus, Direction, Site};

    #[test]
    fn field_preset_counts() {
        let g = build_torus(4).unwrap();
        let t = field_preset(&g, 1.0, [0.0, 0.0, 1.0]);
        assert_eq!(t.len(), 32);
        assert!(t.iter().all(|t| t.coefficient == 1.0 && t.support[0].axis == Axis::Z));
        assert_eq!(field_preset(&g, 2.0, [1.0, 0.0, 1.0]).len(), 64);
    }

    #[test]
    fn x_field_rejected_in_electric_sector() {
        let g = build_torus(3).unwrap();
        let t = field_preset(&g, 1.0, [1.0, 0.0, 0.0]);
        let err = build_defect_hamiltonian(&g, &t, &DisorderField::clean(&g), 1, DefectType::Electric);
        assert!(matches!(
            err,
            Err(Error::AxisMismatch {
                term: 0,
                axis: 'x',
                ..
            })
        ));
        assert!(build_defect_hamiltonian(&g, &t, &DisorderField::clean(&g), 1, DefectType::Magnetic).is_ok());
    }

    #[test]
    fn dipolar_nearest_pairs() {
        let g = build_torus(6).unwrap();
        let t = dipolar_preset(&g, 1.0, 1.0).unwrap();
        assert!(t.iter().all(|t| t.order() == 2 && t.range(&g) <= 1.0 + 1e-12));
        // per edge: 4 perpendicular neighbours at 1/sqrt(2) and 4 parallel at 1
        assert_eq!(t.len(), g.num_edges() * 8 / 2);
        assert!(dipolar_preset(&g, 1.0, 0.5).is_err());
    }

    #[test]
    fn single_defect_nearest_neighbour_hopping() {
        let g = build_torus(5).unwrap();
        let t = field_preset(&g, 0.3, [0.0, 0.0, 1.0]);
        let h = build_defect_hamiltonian(&g, &t, &DisorderField::clean(&g), 1, DefectType::Electric).unwrap();
        let entries = h.hopping_entries();
        assert_eq!(entries.len(), 4 * 25);
        for (r, c, v) in entries {
            assert_eq!(g.distance(r, c), 1);
            assert!((v - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn hardcore_pairs_never_coincide() {
        let g = build_torus(4).unwrap();
        let t = field_preset(&g, 1.0, [0.0, 0.0, 1.0]);
        let h = build_defect_hamiltonian(&g, &t, &DisorderField::clean(&g), 2, DefectType::Electric).unwrap();
        assert_eq!(h.dim(), 120);
        // a pair on adjacent stars has 6 single-step moves, not 8
        let i = h.index_of(&[0, 1]).unwrap();
        let moves = h.hopping_entries().into_iter().filter(|&(_, c, _)| c == i).count();
        assert_eq!(moves, 6);
        assert!(h.basis().iter().all(|c| c.sites()[0] < c.sites()[1]));
    }

    #[test]
    fn potential_is_twice_coupling() {
        let g = build_torus(4).unwrap();
        let d = DisorderField::uniform(&g, 0.5, 3.0, 1.0, 42).unwrap();
        let h = build_defect_hamiltonian(&g, &[], &d, 1, DefectType::Electric).unwrap();
        for s in 0..16 {
            assert_eq!(h.potential()[h.index_of(&[s]).unwrap()], 2.0 * d.j_e[s]);
        }
        let h2 = build_defect_hamiltonian(&g, &[], &d, 2, DefectType::Electric).unwrap();
        let i = h2.index_of(&[3, 9]).unwrap();
        assert_eq!(h2.potential()[i], 2.0 * d.j_e[3] + 2.0 * d.j_e[9]);
    }

    #[test]
    fn disorder_is_reproducible_and_serializable() {
        let g = build_torus(5).unwrap();
        let a = DisorderField::for_potential_width(&g, 50.0, 7).unwrap();
        let b = DisorderField::for_potential_width(&g, 50.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.j_e.iter().all(|&j| (1.0..=26.0).contains(&j)));
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<DisorderField>(&json).unwrap(), a);
        let bad = json.replacen(&format!("{}", a.j_e[0]), "-1.0", 1);
        assert!(serde_json::from_str::<DisorderField>(&bad).is_err());
        assert!(DisorderField::uniform(&g, 0.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn closed_terms_shift_the_diagonal() {
        let g = build_torus(4).unwrap();
        let t = vec![PerturbationTerm::z_string(0.25, &g.plaquette_edges(3)).unwrap()];
        let h = build_defect_hamiltonian(&g, &t, &DisorderField::clean(&g), 1, DefectType::Electric).unwrap();
        assert!(h.hopping_entries().is_empty());
        assert_eq!(h.diagonal_shift(), 0.25);
    }

    #[test]
    fn braiding_flips_crossing_hops() {
        let g = build_torus(6).unwrap();
        let t = field_preset(&g, 1.0, [0.0, 0.0, 1.0]);
        let h = build_defect_hamiltonian(&g, &t, &DisorderField::clean(&g), 1, DefectType::Electric).unwrap();
        let empty = LatticePath::empty(PathKind::Dual, 0);
        assert_eq!(h.attach_braiding_string(&empty).unwrap().hopping_entries(), h.hopping_entries());
        let s = LatticePath::straight(&g, PathKind::Dual, g.index(Site::new(1, 2)), Direction::PosX, 3);
        let b = h.attach_braiding_string(&s).unwrap();
        let flipped: Vec<_> = b.hopping_entries().into_iter().filter(|e| e.2 < 0.0).collect();
        assert_eq!(flipped.len(), 2 * 3);
        let h2 = build_defect_hamiltonian(&g, &t, &DisorderField::clean(&g), 2, DefectType::Electric).unwrap();
        assert!(matches!(h2.attach_braiding_string(&s), Err(Error::UnsupportedSector(_))));
    }
}
