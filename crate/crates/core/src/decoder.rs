//! Syndrome decoding by minimum-weight matching, homology classes of
//! error-plus-correction loops, and the coherent-memory readout experiment.

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::basis_state;
use crate::effective::{build_defect_hamiltonian, DefectType, DisorderField};
use crate::error::{Error, Result};
use crate::geometry::{EdgeOrientation, LatticeGeometry, LatticePath, PathKind, Site};
use crate::pauli::PerturbationTerm;
use crate::propagate::{evolve, Propagator};
use crate::seed::{rng_from_seed, seed_derive};

/// Largest syndrome matched exactly; larger ones fall back to greedy pairing.
pub const EXACT_MATCHING_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub cost: usize,
    /// False when produced by the greedy fallback.
    pub optimal: bool,
}

/// Minimum total periodic 1-norm perfect matching of `sites`.
pub fn min_weight_matching(sites: &[usize], geometry: &LatticeGeometry) -> Result<Pairing> {
    let n = sites.len();
    if n % 2 == 1 {
        return Err(Error::InvalidSyndrome(n));
    }
    if n == 0 {
        return Ok(Pairing {
            pairs: Vec::new(),
            cost: 0,
            optimal: true,
        });
    }
    let d = |i: usize, j: usize| geometry.distance(sites[i], sites[j]);
    if n > EXACT_MATCHING_LIMIT {
        return Ok(greedy_matching(sites, geometry));
    }
    let full = (1usize << n) - 1;
    let mut best = vec![usize::MAX; 1 << n];
    let mut choice = vec![0usize; 1 << n];
    best[0] = 0;
    for mask in 0..=full {
        if best[mask] == usize::MAX || mask == full {
            continue;
        }
        let i = (!mask).trailing_zeros() as usize;
        for j in i + 1..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << i) | (1 << j);
            let c = best[mask] + d(i, j);
            if c < best[next] {
                best[next] = c;
                choice[next] = (i << 8) | j;
            }
        }
    }
    let mut pairs = Vec::with_capacity(n / 2);
    let mut mask = full;
    while mask != 0 {
        let (i, j) = (choice[mask] >> 8, choice[mask] & 0xff);
        pairs.push((sites[i], sites[j]));
        mask &= !((1 << i) | (1 << j));
    }
    pairs.reverse();
    Ok(Pairing {
        pairs,
        cost: best[full],
        optimal: true,
    })
}

/// Repeatedly pair the globally closest remaining defects.
pub fn greedy_matching(sites: &[usize], geometry: &LatticeGeometry) -> Pairing {
    let mut left: Vec<usize> = sites.to_vec();
    let mut pairs = Vec::new();
    let mut cost = 0;
    while left.len() >= 2 {
        let mut best = (usize::MAX, 0, 1);
        for i in 0..left.len() {
            for j in i + 1..left.len() {
                let c = geometry.distance(left[i], left[j]);
                if c < best.0 {
                    best = (c, i, j);
                }
            }
        }
        let (c, i, j) = best;
        cost += c;
        pairs.push((left[i], left[j]));
        left.remove(j);
        left.remove(i);
    }
    Pairing {
        pairs,
        cost,
        optimal: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub electric: Pairing,
    pub magnetic: Pairing,
    /// Z-strings fusing electric pairs.
    pub electric_paths: Vec<LatticePath>,
    /// X-strings on the dual lattice fusing magnetic pairs.
    pub magnetic_paths: Vec<LatticePath>,
}

fn fuse(pairing: &Pairing, kind: PathKind, geometry: &LatticeGeometry) -> Result<Vec<LatticePath>> {
    pairing
        .pairs
        .iter()
        .map(|&(a, b)| geometry.shortest_path(kind, a, b))
        .collect()
}

/// Match each defect species and fuse pairs along shortest paths.
pub fn decode(syndrome: &crate::pauli::Syndrome, geometry: &LatticeGeometry) -> Result<Correction> {
    let electric = min_weight_matching(&syndrome.stars, geometry)?;
    let magnetic = min_weight_matching(&syndrome.plaquettes, geometry)?;
    Ok(Correction {
        electric_paths: fuse(&electric, PathKind::Primal, geometry)?,
        magnetic_paths: fuse(&magnetic, PathKind::Dual, geometry)?,
        electric,
        magnetic,
    })
}

/// Winding parities of a closed loop around the two torus cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LogicalOutcome {
    pub x: bool,
    pub y: bool,
}

impl LogicalOutcome {
    pub fn bits(&self) -> (u8, u8) {
        (self.x as u8, self.y as u8)
    }

    pub fn is_trivial(&self) -> bool {
        !self.x && !self.y
    }
}

/// XOR of edge multisets.
pub fn edge_sum<'a>(paths: impl IntoIterator<Item = &'a [usize]>, num_edges: usize) -> Vec<usize> {
    let mut parity = vec![false; num_edges];
    for p in paths {
        for &e in p {
            parity[e] ^= true;
        }
    }
    (0..num_edges).filter(|&e| parity[e]).collect()
}

/// Homology class of a closed edge set. Primal loops are cut by the column of
/// horizontal edges leaving x = L-1 (x-winding) and the row of vertical edges
/// leaving y = L-1 (y-winding); dual loops by the vertical edges at x = 0 and
/// the horizontal edges at y = 0.
pub fn loop_class(kind: PathKind, edges: &[usize], geometry: &LatticeGeometry) -> Result<LogicalOutcome> {
    let open = geometry.boundary(kind, edges);
    if !open.is_empty() {
        return Err(Error::InconsistentCorrection(open.len()));
    }
    let l = geometry.size();
    let mut out = LogicalOutcome::default();
    for &e in edges {
        let s: Site = geometry.site(e / 2);
        match (kind, geometry.edge_orientation(e)) {
            (PathKind::Primal, EdgeOrientation::Horizontal) if s.x == l - 1 => out.x ^= true,
            (PathKind::Primal, EdgeOrientation::Vertical) if s.y == l - 1 => out.y ^= true,
            (PathKind::Dual, EdgeOrientation::Vertical) if s.x == 0 => out.x ^= true,
            (PathKind::Dual, EdgeOrientation::Horizontal) if s.y == 0 => out.y ^= true,
            _ => {}
        }
    }
    Ok(out)
}

/// Class of the loop formed by an error and its correction.
pub fn logical_class(
    error: &[LatticePath],
    correction: &[LatticePath],
    geometry: &LatticeGeometry,
) -> Result<LogicalOutcome> {
    let mut kinds = error.iter().chain(correction).map(|p| p.kind);
    let Some(kind) = kinds.next() else {
        return Ok(LogicalOutcome::default());
    };
    if kinds.any(|k| k != kind) {
        return Err(Error::InvalidParameter(
            "error and correction mix primal and dual paths".into(),
        ));
    }
    let edges = edge_sum(
        error.iter().chain(correction).map(|p| p.edges.as_slice()),
        geometry.num_edges(),
    );
    loop_class(kind, &edges, geometry)
}

/// One readout: the measured pair and the decoded class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub measured: (usize, usize),
    pub outcome: LogicalOutcome,
}

impl TrialOutcome {
    pub fn failed(&self) -> bool {
        !self.outcome.is_trivial()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryResult {
    pub delta: f64,
    pub t_readout: f64,
    pub trials: usize,
    pub failures: usize,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub stderr: f64,
    pub outcomes: Vec<TrialOutcome>,
}

/// Fixed layout of the memory experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemorySetup {
    /// Star pair created at t = 0.
    pub created: (usize, usize),
}

impl MemorySetup {
    /// Adjacent stars (L/2, L/2) and (L/2 + 1, L/2).
    pub fn centered(geometry: &LatticeGeometry) -> Self {
        let h = geometry.size() / 2;
        Self {
            created: (
                geometry.index(Site::new(h, h)),
                geometry.index(Site::new(h + 1, h)),
            ),
        }
    }
}

/// Error chain for a pair created at `created` and found at `measured`: the
/// creation string plus shortest transport paths, assigning measured to
/// created defects so that the total transport length is minimal.
pub fn transport_error(
    created: (usize, usize),
    measured: (usize, usize),
    geometry: &LatticeGeometry,
) -> Result<Vec<LatticePath>> {
    let (a, b) = created;
    let (y1, y2) = measured;
    let straight = geometry.distance(a, y1) + geometry.distance(b, y2);
    let swapped = geometry.distance(a, y2) + geometry.distance(b, y1);
    let (ta, tb) = if swapped < straight { (y2, y1) } else { (y1, y2) };
    let mut paths = vec![geometry.shortest_path(PathKind::Primal, a, b)?];
    for (from, to) in [(a, ta), (b, tb)] {
        if from != to {
            paths.push(geometry.shortest_path(PathKind::Primal, from, to)?);
        }
    }
    Ok(paths)
}

fn sample_index(psi: &[Complex64], u: f64) -> usize {
    let total: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, a) in psi.iter().enumerate() {
        acc += a.norm_sqr();
        if acc > target {
            return i;
        }
    }
    psi.len() - 1
}

/// Readout failure rate of a coherently spreading electric pair.
///
/// Trial `i` uses `seed_derive(seed, i)`; its disorder comes from sub-stream 0
/// and the position measurement from sub-stream 1, so arms run with the same
/// master seed share measurement randomness trial by trial.
pub fn memory_experiment(
    geometry: &LatticeGeometry,
    terms: &[PerturbationTerm],
    delta: f64,
    t_readout: f64,
    trials: usize,
    seed: u64,
) -> Result<MemoryResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let setup = MemorySetup::centered(geometry);
    let created = [setup.created.0, setup.created.1];
    let evolve_with = |disorder: &DisorderField| -> Result<(Vec<Vec<usize>>, Vec<Complex64>)> {
        let h = build_defect_hamiltonian(geometry, terms, disorder, 2, DefectType::Electric)?;
        let start = h.index_of(&created)?;
        let psi = evolve(&h.to_sparse(), &basis_state(h.dim(), start), &[t_readout], Propagator::Auto)?
            .pop()
            .expect("one time requested");
        Ok((h.basis().iter().map(|c| c.sites().to_vec()).collect(), psi))
    };
    let clean = if delta == 0.0 {
        Some(evolve_with(&DisorderField::for_potential_width(geometry, 0.0, 0)?)?)
    } else {
        None
    };
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome> {
            let trial_seed = seed_derive(seed, trial as u64);
            let owned;
            let (basis, psi) = match &clean {
                Some(c) => (&c.0, &c.1),
                None => {
                    let d = DisorderField::for_potential_width(geometry, delta, seed_derive(trial_seed, 0))?;
                    owned = evolve_with(&d)?;
                    (&owned.0, &owned.1)
                }
            };
            let u: f64 = rng_from_seed(seed_derive(trial_seed, 1)).random();
            let m = &basis[sample_index(psi, u)];
            let measured = (m[0], m[1]);
            let error = transport_error(setup.created, measured, geometry)?;
            let correction = decode(
                &crate::pauli::Syndrome {
                    stars: vec![m[0], m[1]],
                    plaquettes: Vec::new(),
                },
                geometry,
            )?;
            Ok(TrialOutcome {
                trial,
                seed: trial_seed,
                measured,
                outcome: logical_class(&error, &correction.electric_paths, geometry)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = outcomes.iter().filter(|o| o.failed()).count();
    let rate = failures as f64 / trials as f64;
    Ok(MemoryResult {
        delta,
        t_readout,
        trials,
        failures,
        rate,
        stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
        outcomes,
    })
}

/// One-sided paired z-score for `rate(a) > rate(b)` over shared trials.
pub fn paired_significance(a: &MemoryResult, b: &MemoryResult) -> Result<f64> {
    if a.trials != b.trials {
        return Err(Error::ArityMismatch {
            left: a.trials,
            right: b.trials,
        });
    }
    let d: Vec<f64> = a
        .outcomes
        .iter()
        .zip(&b.outcomes)
        .map(|(x, y)| x.failed() as u8 as f64 - y.failed() as u8 as f64)
        .collect();
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    Ok(if se == 0.0 {
        if m > 0.0 {
            f64::INFINITY
        } else if m < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        m / se
    })
}
