//! Full statevector engine for toric codes with L <= 3.
//!
//! Qubit `e` lives on edge `e`; bit value 1 means Z = -1. A Pauli string is
//! stored as `i^{n_Y} X^{xmask} Z^{zmask}`, so that
//! `P|b> = i^{n_Y} (-1)^{|b & zmask|} |b ^ xmask>`.
//!
//! Electric-sector states are built on `prod_s (1 + A_s)/2 |0...0>`, magnetic
//! ones on `prod_p (1 + B_p)/2 |+...+>`. Both are logical eigenstates of the
//! string type used to create the defects, so closed strings act as +1.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::effective::DefectType;
use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, PathKind};
use crate::pauli::{Axis, PerturbationTerm};

pub const MAX_ORACLE_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliOp {
    pub xmask: u32,
    pub zmask: u32,
    pub n_y: u32,
}

impl PauliOp {
    pub fn from_term(term: &PerturbationTerm) -> Self {
        let mut op = PauliOp {
            xmask: 0,
            zmask: 0,
            n_y: 0,
        };
        for f in &term.support {
            let bit = 1u32 << f.edge;
            match f.axis {
                Axis::X => op.xmask |= bit,
                Axis::Z => op.zmask |= bit,
                Axis::Y => {
                    op.xmask |= bit;
                    op.zmask |= bit;
                    op.n_y += 1;
                }
            }
        }
        op
    }

    pub fn z_string(edges: &[usize]) -> Self {
        Self {
            xmask: 0,
            zmask: edges.iter().fold(0, |m, &e| m ^ (1 << e)),
            n_y: 0,
        }
    }

    pub fn x_string(edges: &[usize]) -> Self {
        Self {
            xmask: edges.iter().fold(0, |m, &e| m ^ (1 << e)),
            zmask: 0,
            n_y: 0,
        }
    }

    fn phase(&self) -> Complex64 {
        match self.n_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// `out += coeff * P * input`.
    pub fn apply_add(&self, coeff: f64, input: &[Complex64], out: &mut [Complex64]) {
        let c = self.phase() * coeff;
        for (b, &amp) in input.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let sign = if (b as u32 & self.zmask).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            out[b ^ self.xmask as usize] += c * amp * sign;
        }
    }

    pub fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); input.len()];
        self.apply_add(1.0, input, &mut out);
        out
    }
}

/// Statevector toolbox bound to one small torus.
#[derive(Debug, Clone)]
pub struct SpinOracle {
    geometry: LatticeGeometry,
}

/// Sector projection of a perturbation: dense matrix plus its basis labels.
#[derive(Debug, Clone)]
pub struct SectorMatrix {
    pub defect_type: DefectType,
    pub basis: Vec<Vec<usize>>,
    pub matrix: DMatrix<Complex64>,
}

impl SpinOracle {
    pub fn new(geometry: &LatticeGeometry) -> Result<Self> {
        if geometry.size() > MAX_ORACLE_SIZE {
            return Err(Error::OracleTooLarge(geometry.size()));
        }
        Ok(Self {
            geometry: geometry.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.geometry.num_edges()
    }

    fn project(&self, mut v: Vec<Complex64>, ops: impl Iterator<Item = PauliOp>) -> Vec<Complex64> {
        for op in ops {
            let mut w: Vec<Complex64> = v.iter().map(|a| a * 0.5).collect();
            op.apply_add(0.5, &v, &mut w);
            v = w;
        }
        normalize(&mut v);
        v
    }

    /// Code state used as the reference vacuum of a defect type.
    pub fn ground_state(&self, defect_type: DefectType) -> Vec<Complex64> {
        let g = &self.geometry;
        match defect_type {
            DefectType::Electric => {
                let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
                v[0] = Complex64::new(1.0, 0.0);
                self.project(v, (0..g.num_stars()).map(|s| PauliOp::x_string(&g.star_edges(s))))
            }
            DefectType::Magnetic => {
                let amp = (self.dim() as f64).sqrt().recip();
                let v = vec![Complex64::new(amp, 0.0); self.dim()];
                self.project(
                    v,
                    (0..g.num_plaquettes()).map(|p| PauliOp::z_string(&g.plaquette_edges(p))),
                )
            }
        }
    }

    /// String operator on an edge set: Z for electric defects, X for magnetic.
    pub fn string_op(defect_type: DefectType, edges: &[usize]) -> PauliOp {
        match defect_type {
            DefectType::Electric => PauliOp::z_string(edges),
            DefectType::Magnetic => PauliOp::x_string(edges),
        }
    }

    /// Canonical representative of a configuration: sorted defects paired
    /// consecutively, each pair joined by its staircase shortest path.
    pub fn configuration_state(
        &self,
        defect_type: DefectType,
        ground: &[Complex64],
        config: &[usize],
    ) -> Result<Vec<Complex64>> {
        if config.len() % 2 == 1 {
            return Err(Error::InvalidSyndrome(config.len()));
        }
        let kind = match defect_type {
            DefectType::Electric => PathKind::Primal,
            DefectType::Magnetic => PathKind::Dual,
        };
        let mut sorted = config.to_vec();
        sorted.sort_unstable();
        let mut v = ground.to_vec();
        for pair in sorted.chunks(2) {
            let path = self.geometry.shortest_path(kind, pair[0], pair[1])?;
            v = Self::string_op(defect_type, &path.edges).apply(&v);
        }
        Ok(v)
    }

    /// Stars (electric) or plaquettes (magnetic) whose stabilizer has
    /// expectation -1 in the given state; `None` if the state is not a
    /// stabilizer eigenstate.
    pub fn defects_of(&self, defect_type: DefectType, v: &[Complex64]) -> Option<Vec<usize>> {
        let g = &self.geometry;
        let ops: Vec<PauliOp> = match defect_type {
            DefectType::Electric => (0..g.num_stars())
                .map(|s| PauliOp::x_string(&g.star_edges(s)))
                .collect(),
            DefectType::Magnetic => (0..g.num_plaquettes())
                .map(|p| PauliOp::z_string(&g.plaquette_edges(p)))
                .collect(),
        };
        let mut out = Vec::new();
        for (i, op) in ops.iter().enumerate() {
            let e = inner(v, &op.apply(v)).re;
            if (e + 1.0).abs() < 1e-9 {
                out.push(i);
            } else if (e - 1.0).abs() > 1e-9 {
                return None;
            }
        }
        Some(out)
    }

    /// `<basis_i| H_I |basis_j>` over every configuration of `2 * pairs`
    /// defects, by full statevector arithmetic.
    pub fn sector_matrix(
        &self,
        terms: &[PerturbationTerm],
        defect_type: DefectType,
        pairs: usize,
    ) -> Result<SectorMatrix> {
        for t in terms {
            t.check_edges(&self.geometry)?;
        }
        let sites = self.geometry.num_stars();
        let basis = combinations(sites, 2 * pairs);
        let ground = self.ground_state(defect_type);
        let states = basis
            .iter()
            .map(|c| self.configuration_state(defect_type, &ground, c))
            .collect::<Result<Vec<_>>>()?;
        let ops: Vec<(f64, PauliOp)> = terms
            .iter()
            .map(|t| (t.coefficient, PauliOp::from_term(t)))
            .collect();
        let n = basis.len();
        let mut matrix = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let mut hv = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (j, v) in states.iter().enumerate() {
            hv.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
            for (c, op) in &ops {
                op.apply_add(*c, v, &mut hv);
            }
            for (i, u) in states.iter().enumerate() {
                matrix[(i, j)] = inner(u, &hv);
            }
        }
        Ok(SectorMatrix {
            defect_type,
            basis,
            matrix,
        })
    }
}

/// Projection of the perturbation onto the sector with `n_e` electric pairs
/// and `n_m` magnetic pairs, in the canonical configuration basis.
pub fn exact_sector_projection(
    terms: &[PerturbationTerm],
    sector: (usize, usize),
    geometry: &LatticeGeometry,
) -> Result<SectorMatrix> {
    let oracle = SpinOracle::new(geometry)?;
    match sector {
        (n, 0) => oracle.sector_matrix(terms, DefectType::Electric, n),
        (0, n) => oracle.sector_matrix(terms, DefectType::Magnetic, n),
        (e, m) => Err(Error::UnsupportedSector(format!(
            "({e}, {m}): both defect species dynamic"
        ))),
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
}

/// All strictly increasing k-tuples from `0..n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_torus, Direction, LatticePath, Site};
    use crate::pauli::Factor;

    #[test]
    fn too_large() {
        let g = build_torus(4).unwrap();
        assert!(matches!(
            exact_sector_projection(&[], (1, 0), &g),
            Err(Error::OracleTooLarge(4))
        ));
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(9, 2).len(), 36);
        assert_eq!(combinations(5, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(4, 2)[..3], [vec![0, 1], vec![0, 2], vec![0, 3]]);
    }

    #[test]
    fn empty_terms_give_zero_matrix() {
        let g = build_torus(2).unwrap();
        let m = exact_sector_projection(&[], (1, 0), &g).unwrap();
        assert_eq!(m.basis.len(), 6);
        assert!(m.matrix.iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn ground_states_are_stabilized() {
        let g = build_torus(2).unwrap();
        let o = SpinOracle::new(&g).unwrap();
        for t in [DefectType::Electric, DefectType::Magnetic] {
            let v = o.ground_state(t);
            assert_eq!(o.defects_of(DefectType::Electric, &v), Some(vec![]));
            assert_eq!(o.defects_of(DefectType::Magnetic, &v), Some(vec![]));
        }
    }

    #[test]
    fn configuration_states_carry_their_defects() {
        let g = build_torus(3).unwrap();
        let o = SpinOracle::new(&g).unwrap();
        let ground = o.ground_state(DefectType::Electric);
        for c in combinations(9, 2) {
            let v = o.configuration_state(DefectType::Electric, &ground, &c).unwrap();
            assert_eq!(o.defects_of(DefectType::Electric, &v), Some(c));
        }
    }

    #[test]
    fn x_terms_vanish_in_electric_sector() {
        let g = build_torus(3).unwrap();
        let terms: Vec<_> = (0..g.num_edges())
            .map(|e| {
                PerturbationTerm::new(
                    0.7,
                    vec![Factor { edge: e, axis: Axis::X }],
                )
                .unwrap()
            })
            .chain(std::iter::once(
                PerturbationTerm::new(
                    0.3,
                    vec![
                        Factor { edge: 0, axis: Axis::Y },
                        Factor { edge: 1, axis: Axis::Z },
                    ],
                )
                .unwrap(),
            ))
            .collect();
        let m = exact_sector_projection(&terms, (1, 0), &g).unwrap();
        assert!(m.matrix.iter().all(|a| a.norm() < 1e-14));
    }

    #[test]
    fn hermitian_for_random_terms() {
        let g = build_torus(3).unwrap();
        let mut s = 5u64;
        let mut next = |m: u64| {
            s = crate::seed::mix64(s.wrapping_add(3));
            s % m
        };
        let axes = [Axis::X, Axis::Y, Axis::Z];
        let mut terms = Vec::new();
        for _ in 0..12 {
            let a = next(18) as usize;
            let b = (a + 1 + next(17) as usize) % 18;
            terms.push(
                PerturbationTerm::new(
                    next(1000) as f64 / 500.0 - 1.0,
                    vec![
                        Factor { edge: a, axis: axes[next(3) as usize] },
                        Factor { edge: b, axis: axes[next(3) as usize] },
                    ],
                )
                .unwrap(),
            );
        }
        let m = exact_sector_projection(&terms, (1, 0), &g).unwrap();
        let dev = (&m.matrix - m.matrix.adjoint()).iter().map(|a| a.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "{dev}");
    }

    #[test]
    fn homotopic_strings_give_equal_states() {
        let g = build_torus(3).unwrap();
        let o = SpinOracle::new(&g).unwrap();
        let ground = o.ground_state(DefectType::Electric);
        let a = g.index(Site::new(0, 0));
        let straight = LatticePath::walk(&g, PathKind::Primal, a, &[Direction::PosX, Direction::PosY]);
        let other = LatticePath::walk(&g, PathKind::Primal, a, &[Direction::PosY, Direction::PosX]);
        let u = PauliOp::z_string(&straight.edges).apply(&ground);
        let v = PauliOp::z_string(&other.edges).apply(&ground);
        let dev = u.iter().zip(&v).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn mixed_sector_rejected() {
        let g = build_torus(2).unwrap();
        assert!(matches!(
            exact_sector_projection(&[], (1, 1), &g),
            Err(Error::UnsupportedSector(_))
        ));
    }
}
