//! Compressed-row Hermitian operators.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseHermitian {
    /// Assemble from triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, Complex64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.max(c) + 1,
                });
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry present") += v;
                continue;
            }
            last = Some((r, c));
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self {
            dim,
            row_ptr,
            cols,
            vals,
        };
        m.drop_zeros();
        Ok(m)
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != Complex64::new(0.0, 0.0) {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), &t)
    }

    fn drop_zeros(&mut self) {
        let mut row_ptr = vec![0; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != Complex64::new(0.0, 0.0) {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `out = A x`.
    pub fn matvec(&self, x: &[Complex64], out: &mut [Complex64]) {
        for r in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            out[r] = acc;
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut out);
        out
    }

    /// `<x|A|x>`.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let ax = self.apply(x);
        x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Largest |A_ij - conj(A_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let d = self.hermiticity_defect();
        if d > HERMITIAN_TOL {
            Err(Error::NotHermitian(d))
        } else {
            Ok(())
        }
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    /// Spectral enclosure `[lo, hi]` from Gershgorin discs.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        if self.dim == 0 {
            return (0.0, 0.0);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (c, v) in self.row(r) {
                if c == r {
                    diag = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, Complex64::new(0.0, 0.0));
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v.re;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let m = SparseHermitian::from_triplets(
            2,
            &[(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0)), (1, 1, c(2.0, 0.0)), (1, 1, c(1.0, 0.0))],
        )
        .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 1), c(3.0, 0.0));
    }

    #[test]
    fn hermiticity() {
        let h = SparseHermitian::from_triplets(2, &[(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))]).unwrap();
        assert!(h.check_hermitian().is_ok());
        let n = SparseHermitian::from_triplets(2, &[(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, 1.0))]).unwrap();
        assert!(matches!(n.check_hermitian(), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn gershgorin_encloses_spectrum() {
        let h = SparseHermitian::from_triplets(
            3,
            &[
                (0, 0, c(1.0, 0.0)),
                (0, 1, c(0.5, 0.0)),
                (1, 0, c(0.5, 0.0)),
                (2, 2, c(-2.0, 0.0)),
            ],
        )
        .unwrap();
        let (lo, hi) = h.gershgorin_bounds();
        let eig = h.to_dense_real().symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= lo - 1e-12 && e <= hi + 1e-12));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(SparseHermitian::from_triplets(2, &[(2, 0, c(1.0, 0.0))]).is_err());
    }
}
