//! Relative motion of an electric defect pair at fixed total quasi-momentum k.
//!
//! The fiber basis is indexed by the relative coordinate `l = n_1 - n_2` on a
//! truncated box `[-r, r]^2`. A coupling with displacement `p = (p_1, p_2)`
//! contributes
//!
//! ```text
//! T(k)(l, j) += c · ξ_p · exp(i p_2 · k)   for j = l + p_2 - p_1,
//! ```
//!
//! with `c = 2 / (2π)^4`. Rows and columns at `l = 0` are zeroed (the pair
//! may not coincide). Entries leaving the box are dropped (hard wall).
//!
//! Perturbation terms are read as translation-class templates on an
//! embedding torus: a Z-string with two boundary stars `a, b` moves either
//! particle by `±(b - a)`, a closed string shifts the diagonal, and a string
//! with four boundary stars moves both particles at once and therefore only
//! acts at one relative position (inhomogeneous part).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, PathKind};
use crate::pauli::{Axis, PerturbationTerm};
use crate::propagate::{evolve, Propagator};
use crate::seed::rng_from_seed;
use crate::sparse::SparseHermitian;

/// `2 / (2π)^4`.
pub const PREFACTOR: f64 = 2.0 / (16.0 * PI * PI * PI * PI);

/// One displacement `p = (p_1, p_2) ∈ Z^4` with its coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub p1: [i64; 2],
    pub p2: [i64; 2],
    pub coefficient: f64,
}

/// A move that only acts at one relative position `from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMove {
    pub from: [i64; 2],
    pub p1: [i64; 2],
    pub p2: [i64; 2],
    pub coefficient: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FiberCouplings {
    pub homogeneous: Vec<Displacement>,
    pub inhomogeneous: Vec<LocalMove>,
    /// Largest `R + m + 1` over the templates.
    pub support: f64,
}

fn min_image(d: i64, size: usize) -> i64 {
    let l = size as i64;
    let m = d.rem_euclid(l);
    if 2 * m > l {
        m - l
    } else {
        m
    }
}

/// Decompose template terms into displacement couplings.
pub fn fiber_couplings(templates: &[PerturbationTerm], geometry: &LatticeGeometry) -> Result<FiberCouplings> {
    let size = geometry.size();
    let offset = |a: usize, b: usize| -> [i64; 2] {
        let (sa, sb) = (geometry.site(a), geometry.site(b));
        [
            min_image(sb.x as i64 - sa.x as i64, size),
            min_image(sb.y as i64 - sa.y as i64, size),
        ]
    };
    let mut out = FiberCouplings::default();
    for (i, t) in templates.iter().enumerate() {
        t.check_edges(geometry)?;
        if let Some(axis) = t.first_axis_other_than(Axis::Z) {
            return Err(Error::AxisMismatch {
                term: i,
                axis: axis.symbol(),
                sector: "electric",
            });
        }
        out.support = out.support.max(t.range(geometry) + t.order() as f64 + 1.0);
        let xi = t.coefficient;
        let b = geometry.boundary(PathKind::Primal, &t.edges());
        match b.len() {
            0 => out.homogeneous.push(Displacement {
                p1: [0, 0],
                p2: [0, 0],
                coefficient: xi,
            }),
            2 => {
                let d = offset(b[0], b[1]);
                let neg = [-d[0], -d[1]];
                for (p1, p2) in [(d, [0, 0]), (neg, [0, 0]), ([0, 0], d), ([0, 0], neg)] {
                    out.homogeneous.push(Displacement {
                        p1,
                        p2,
                        coefficient: xi,
                    });
                }
            }
            4 => {
                let r: Vec<[i64; 2]> = b.iter().map(|&s| offset(b[0], s)).collect();
                let sub = |a: [i64; 2], b: [i64; 2]| [a[0] - b[0], a[1] - b[1]];
                let l1 = |a: [i64; 2]| a[0].abs() + a[1].abs();
                for (f1, f2) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                    // shorter assignment; ties broken on the undirected
                    // matching so that the reverse move picks the same one
                    let (t1, t2) = {
                        let rest: Vec<usize> = (0..4).filter(|&x| x != f1 && x != f2).collect();
                        let key = |a: usize, b: usize| {
                            let cost = l1(sub(r[a], r[f1])) + l1(sub(r[b], r[f2]));
                            let mut m = [(f1.min(a), f1.max(a)), (f2.min(b), f2.max(b))];
                            m.sort_unstable();
                            (cost, m)
                        };
                        if key(rest[1], rest[0]) < key(rest[0], rest[1]) {
                            (rest[1], rest[0])
                        } else {
                            (rest[0], rest[1])
                        }
                    };
                    // both labellings of the pair
                    for (a, b, ta, tb) in [(f1, f2, t1, t2), (f2, f1, t2, t1)] {
                        out.inhomogeneous.push(LocalMove {
                            from: sub(r[a], r[b]),
                            p1: sub(r[ta], r[a]),
                            p2: sub(r[tb], r[b]),
                            coefficient: xi,
                        });
                    }
                }
            }
            n => {
                return Err(Error::InvalidTerm(format!(
                    "term {i} has {n} boundary stars; a pair supports at most 4"
                )))
            }
        }
    }
    Ok(out)
}

/// Truncated fiber Hamiltonian `T(k)_0 + T(k)_I`.
#[derive(Debug, Clone)]
pub struct FiberHamiltonian {
    pub k: [f64; 2],
    pub radius: usize,
    pub couplings: FiberCouplings,
    matrix: SparseHermitian,
    homogeneous: SparseHermitian,
}

pub fn build_fiber(
    k: [f64; 2],
    templates: &[PerturbationTerm],
    geometry: &LatticeGeometry,
    radius: usize,
) -> Result<FiberHamiltonian> {
    FiberHamiltonian::build(k, templates, geometry, radius)
}

/// `E_q = c Σ_p ξ_p exp(i p_2·k) exp(i q·(p_2 - p_1))` over the homogeneous part.
pub fn fiber_dispersion(
    k: [f64; 2],
    templates: &[PerturbationTerm],
    geometry: &LatticeGeometry,
    q: [f64; 2],
) -> Result<Complex64> {
    let c = fiber_couplings(templates, geometry)?;
    Ok(dispersion(&c.homogeneous, k, q))
}

fn dispersion(hom: &[Displacement], k: [f64; 2], q: [f64; 2]) -> Complex64 {
    hom.iter()
        .map(|d| {
            let phase = dot(d.p2, k) + q[0] * (d.p2[0] - d.p1[0]) as f64 + q[1] * (d.p2[1] - d.p1[1]) as f64;
            Complex64::from_polar(PREFACTOR * d.coefficient, phase)
        })
        .sum()
}

fn dot(p: [i64; 2], k: [f64; 2]) -> f64 {
    p[0] as f64 * k[0] + p[1] as f64 * k[1]
}

impl FiberHamiltonian {
    pub fn build(k: [f64; 2], templates: &[PerturbationTerm], geometry: &LatticeGeometry, radius: usize) -> Result<Self> {
        let couplings = fiber_couplings(templates, geometry)?;
        let required = if templates.is_empty() {
            0
        } else {
            (couplings.support + 1.0).ceil() as usize
        };
        if radius < required {
            return Err(Error::BoxTooSmall { radius, required });
        }
        let side = 2 * radius + 1;
        let mut hom = Vec::new();
        for y in -(radius as i64)..=radius as i64 {
            for x in -(radius as i64)..=radius as i64 {
                let l = [x, y];
                for d in &couplings.homogeneous {
                    let j = [x + d.p2[0] - d.p1[0], y + d.p2[1] - d.p1[1]];
                    if let Some(ji) = Self::index_in(radius, j) {
                        hom.push((
                            Self::index_in(radius, l).expect("inside"),
                            ji,
                            Complex64::from_polar(PREFACTOR * d.coefficient, dot(d.p2, k)),
                        ));
                    }
                }
            }
        }
        let mut inh = Vec::new();
        for m in &couplings.inhomogeneous {
            let to = [m.from[0] + m.p1[0] - m.p2[0], m.from[1] + m.p1[1] - m.p2[1]];
            if let (Some(r), Some(c)) = (Self::index_in(radius, to), Self::index_in(radius, m.from)) {
                inh.push((r, c, Complex64::from_polar(PREFACTOR * m.coefficient, dot(m.p2, k))));
            }
        }
        let homogeneous = SparseHermitian::from_triplets(side * side, &hom)?;
        let origin = Self::index_in(radius, [0, 0]).expect("origin inside");
        let all: Vec<_> = hom
            .into_iter()
            .chain(inh)
            .filter(|&(r, c, _)| r != origin && c != origin)
            .collect();
        let matrix = SparseHermitian::from_triplets(side * side, &all)?;
        Ok(Self {
            k,
            radius,
            couplings,
            matrix,
            homogeneous,
        })
    }

    fn index_in(radius: usize, l: [i64; 2]) -> Option<usize> {
        let r = radius as i64;
        if l[0].abs() > r || l[1].abs() > r {
            return None;
        }
        Some(((l[1] + r) * (2 * r + 1) + l[0] + r) as usize)
    }

    pub fn index(&self, l: [i64; 2]) -> Option<usize> {
        Self::index_in(self.radius, l)
    }

    pub fn coordinate(&self, index: usize) -> [i64; 2] {
        let side = 2 * self.radius + 1;
        let r = self.radius as i64;
        [(index % side) as i64 - r, (index / side) as i64 - r]
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SparseHermitian {
        &self.matrix
    }

    /// Homogeneous part without the hard-core zeroing.
    pub fn homogeneous_matrix(&self) -> &SparseHermitian {
        &self.homogeneous
    }

    /// Add a random real symmetric short-range `T_I`: a diagonal term and
    /// nearest-neighbour bonds, uniform in `±strength · c`, on all nonzero
    /// `l` with `||l||_2 <= support`.
    pub fn with_random_interaction(&self, support: f64, strength: f64, seed: u64) -> Result<Self> {
        let reach = support.floor() as i64;
        if reach as usize + 1 > self.radius {
            return Err(Error::BoxTooSmall {
                radius: self.radius,
                required: reach as usize + 1,
            });
        }
        let mut rng = rng_from_seed(seed);
        let mut draw = || PREFACTOR * strength * (2.0 * rng.random::<f64>() - 1.0);
        let inside = |l: [i64; 2]| l != [0, 0] && ((l[0] * l[0] + l[1] * l[1]) as f64).sqrt() <= support + 1e-12;
        let mut t: Vec<(usize, usize, Complex64)> = self.matrix.triplets().collect();
        for y in -reach..=reach {
            for x in -reach..=reach {
                let l = [x, y];
                if !inside(l) {
                    continue;
                }
                let i = self.index(l).expect("inside box");
                t.push((i, i, Complex64::new(draw(), 0.0)));
                for n in [[x + 1, y], [x, y + 1]] {
                    if inside(n) {
                        let j = self.index(n).expect("inside box");
                        let v = Complex64::new(draw(), 0.0);
                        t.push((i, j, v));
                        t.push((j, i, v));
                    }
                }
            }
        }
        let mut out = self.clone();
        out.matrix = SparseHermitian::from_triplets(self.dim(), &t)?;
        out.couplings.support = out.couplings.support.max(support);
        Ok(out)
    }

    /// Light-cone speed bound `max_l Σ_j |T(l,j)| ||l - j||_∞`.
    pub fn velocity_bound(&self) -> f64 {
        (0..self.dim())
            .map(|r| {
                let lr = self.coordinate(r);
                self.matrix
                    .row(r)
                    .map(|(c, v)| {
                        let lc = self.coordinate(c);
                        v.norm() * (lr[0] - lc[0]).abs().max((lr[1] - lc[1]).abs()) as f64
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Time before anything launched within `extent` of the origin can reach
    /// the wall.
    pub fn reflection_time(&self, extent: f64) -> f64 {
        let v = self.velocity_bound();
        if v == 0.0 {
            return f64::INFINITY;
        }
        ((self.radius as f64 - extent).max(0.0)) / v
    }

    /// Indices with `||l||_∞ <= half`.
    pub fn central_block(&self, half: usize) -> Vec<usize> {
        let h = half as i64;
        let mut out = Vec::new();
        for y in -h..=h {
            for x in -h..=h {
                if let Some(i) = self.index([x, y]) {
                    out.push(i);
                }
            }
        }
        out
    }

    /// Normalized Gaussian `exp(-|l|²/4σ²) exp(i q·l)` with the origin removed.
    pub fn gaussian_packet(&self, sigma: f64, q: [f64; 2]) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..self.dim())
            .map(|i| {
                let l = self.coordinate(i);
                if l == [0, 0] {
                    return Complex64::new(0.0, 0.0);
                }
                let r2 = (l[0] * l[0] + l[1] * l[1]) as f64;
                Complex64::from_polar((-r2 / (4.0 * sigma * sigma)).exp(), dot(l, q))
            })
            .collect();
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
        v
    }

    pub fn dispersion(&self, q: [f64; 2]) -> Complex64 {
        dispersion(&self.couplings.homogeneous, self.k, q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub times: Vec<f64>,
    pub in_region: Vec<f64>,
    pub reflection_time: f64,
    pub threshold: f64,
    /// Some sampled time lies past the reflection bound.
    pub contaminated: bool,
    /// Smallest in-region probability among times before the reflection bound.
    pub pre_reflection_min: f64,
    /// First time before reflection at which the probability is below threshold.
    pub escape_time: Option<f64>,
}

impl EscapeReport {
    pub fn escaped(&self) -> bool {
        self.escape_time.is_some()
    }
}

/// Track `Σ_Λ |ψ(t)|²` for a fiber wavefunction, flagging times past the
/// light-cone reflection bound.
pub fn ballistic_escape_probe(
    fiber: &FiberHamiltonian,
    psi0: &[Complex64],
    times: &[f64],
    region: &[usize],
    extent: f64,
    threshold: f64,
) -> Result<EscapeReport> {
    let states = evolve(fiber.matrix(), psi0, times, Propagator::Chebyshev)?;
    let in_region: Vec<f64> = states
        .iter()
        .map(|psi| region.iter().map(|&i| psi[i].norm_sqr()).sum())
        .collect();
    let reflection_time = fiber.reflection_time(extent);
    let pre: Vec<(f64, f64)> = times
        .iter()
        .zip(&in_region)
        .filter(|(&t, _)| t <= reflection_time)
        .map(|(&t, &p)| (t, p))
        .collect();
    Ok(EscapeReport {
        times: times.to_vec(),
        contaminated: times.iter().any(|&t| t > reflection_time),
        pre_reflection_min: pre.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        escape_time: pre.iter().find(|p| p.1 < threshold).map(|p| p.0),
        in_region,
        reflection_time,
        threshold,
    })
}

/// Templates for nearest-neighbour hopping: one horizontal and one vertical
/// single-edge Z term.
pub fn nearest_neighbor_templates(geometry: &LatticeGeometry, coefficient: f64) -> Vec<PerturbationTerm> {
    vec![
        PerturbationTerm::z_string(coefficient, &[0]).expect("single edge"),
        PerturbationTerm::z_string(coefficient, &[1]).expect("single edge"),
    ]
    .into_iter()
    .filter(|_| geometry.num_edges() > 1)
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_torus;

    fn torus() -> LatticeGeometry {
        build_torus(16).unwrap()
    }

    #[test]
    fn empty_terms_give_zero() {
        let g = torus();
        let f = build_fiber([0.3, 1.0], &[], &g, 3).unwrap();
        assert_eq!(f.matrix().nnz(), 0);
        assert_eq!(fiber_dispersion([0.0, 0.0], &[], &g, [1.0, 2.0]).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn nearest_neighbour_at_k0() {
        let g = torus();
        let t = nearest_neighbor_templates(&g, 1.0);
        let f = build_fiber([0.0, 0.0], &t, &g, 6).unwrap();
        let a = f.index([2, 1]).unwrap();
        for (n, want) in [([3, 1], 2.0), ([2, 2], 2.0), ([1, 1], 2.0), ([3, 2], 0.0), ([2, 1], 0.0)] {
            let b = f.index(n).unwrap();
            assert!((f.matrix().get(a, b).re - want * PREFACTOR).abs() < 1e-18);
        }
    }

    #[test]
    fn hardcore_row_and_column_vanish() {
        let g = torus();
        let t = nearest_neighbor_templates(&g, 1.0);
        for k in [[0.0, 0.0], [0.7, -2.1], [PI, PI]] {
            let f = build_fiber(k, &t, &g, 5).unwrap();
            let o = f.index([0, 0]).unwrap();
            assert!(f.matrix().triplets().all(|(r, c, _)| r != o && c != o));
            assert!(f.matrix().hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn dispersion_is_cosine_band() {
        let g = torus();
        let t = nearest_neighbor_templates(&g, 1.0);
        for q in [[0.0, 0.0], [0.4, 1.3], [PI, 0.2]] {
            let e = fiber_dispersion([0.0, 0.0], &t, &g, q).unwrap();
            assert!((e.re - 4.0 * PREFACTOR * (q[0].cos() + q[1].cos())).abs() < 1e-16);
            assert!(e.im.abs() < 1e-16);
        }
        let e0 = fiber_dispersion([0.5, 0.1], &t, &g, [0.0, 0.0]).unwrap();
        let want = PREFACTOR * (4.0 + 2.0 * 0.5f64.cos() + 2.0 * 0.1f64.cos());
        assert!((e0.re - want).abs() < 1e-16);
    }

    #[test]
    fn small_box_rejected() {
        let g = torus();
        let t = vec![PerturbationTerm::z_string(1.0, &[0, 2]).unwrap()];
        assert!(matches!(build_fiber([0.0, 0.0], &t, &g, 2), Err(Error::BoxTooSmall { .. })));
    }

    #[test]
    fn two_pair_terms_are_local_and_hermitian() {
        let g = torus();
        // two parallel horizontal edges one row apart: four boundary stars
        let far = g.edge_at(0, 1, crate::geometry::EdgeOrientation::Horizontal);
        let t = vec![PerturbationTerm::z_string(0.5, &[0, far]).unwrap()];
        let c = fiber_couplings(&t, &g).unwrap();
        assert!(c.homogeneous.is_empty());
        assert_eq!(c.inhomogeneous.len(), 12);
        let f = build_fiber([0.3, 0.9], &t, &g, 6).unwrap();
        assert!(f.matrix().hermiticity_defect() < 1e-15);
        assert!(f.matrix().nnz() > 0);
        for (r, _, _) in f.matrix().triplets() {
            let l = f.coordinate(r);
            assert!(l[0].abs() <= 2 && l[1].abs() <= 2);
        }
    }

    #[test]
    fn finite_range() {
        let g = torus();
        let t = vec![
            PerturbationTerm::z_string(0.3, &[0, 1]).unwrap(),
            PerturbationTerm::z_string(1.0, &[0]).unwrap(),
        ];
        let f = build_fiber([0.2, 0.4], &t, &g, 8).unwrap();
        for (r, c, _) in f.matrix().triplets() {
            let (a, b) = (f.coordinate(r), f.coordinate(c));
            assert!((a[0] - b[0]).abs().max((a[1] - b[1]).abs()) <= 3);
        }
    }
}
