//! Time evolution `exp(-iHt)`: Chebyshev expansion for sparse operators and a
//! dense eigendecomposition reference.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseHermitian;

/// Largest `a * dt` handled by one Chebyshev expansion.
const MAX_SCALED_STEP: f64 = 100.0;
/// Series truncation threshold on |J_k|.
const TAIL_TOL: f64 = 1e-17;
/// Dimension up to which `Propagator::Auto` diagonalizes.
pub const DENSE_AUTO_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagator {
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

/// Bessel functions `J_0(x) .. J_n(x)` for `x >= 0` by Miller's backward
/// recurrence, normalized with `J_0 + 2 sum_k J_2k = 1`.
pub fn bessel_j_sequence(n: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "bessel_j_sequence needs x >= 0");
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = (n.max(x.ceil() as usize) + 30 + (20.0 * x.max(1.0)).sqrt() as usize) | 1;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    let mut k = start;
    loop {
        if k <= n {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

fn chebyshev_coefficients(x: f64) -> Vec<Complex64> {
    let ax = x.abs();
    let mut n = (ax as usize) + 40;
    loop {
        let j = bessel_j_sequence(n, ax);
        if let Some(cut) = (ax as usize..=n).find(|&k| j[k].abs() < TAIL_TOL && (k == n || j[k + 1].abs() < TAIL_TOL)) {
            let minus_i = Complex64::new(0.0, -1.0);
            return (0..=cut)
                .map(|k| {
                    let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
                    let w = if k == 0 { 1.0 } else { 2.0 };
                    minus_i.powu(k as u32) * (w * sign * j[k])
                })
                .collect();
        }
        n *= 2;
    }
}

/// Chebyshev propagator for a sparse Hermitian operator.
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator<'a> {
    h: &'a SparseHermitian,
    center: f64,
    half_width: f64,
}

impl<'a> ChebyshevPropagator<'a> {
    pub fn new(h: &'a SparseHermitian) -> Self {
        let (lo, hi) = h.gershgorin_bounds();
        let center = 0.5 * (lo + hi);
        let half_width = (0.5 * (hi - lo) * 1.01).max(1e-12);
        Self {
            h,
            center,
            half_width,
        }
    }

    fn scaled_apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.h.matvec(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = (*o - xi * self.center) / self.half_width;
        }
    }

    fn single(&self, psi: &[Complex64], dt: f64) -> Vec<Complex64> {
        let coeffs = chebyshev_coefficients(self.half_width * dt);
        let n = psi.len();
        let mut t_prev = psi.to_vec();
        let mut out: Vec<Complex64> = psi.iter().map(|a| a * coeffs[0]).collect();
        if coeffs.len() > 1 {
            let mut t_cur = vec![Complex64::new(0.0, 0.0); n];
            self.scaled_apply(&t_prev, &mut t_cur);
            for (o, t) in out.iter_mut().zip(&t_cur) {
                *o += t * coeffs[1];
            }
            let mut t_next = vec![Complex64::new(0.0, 0.0); n];
            for c in &coeffs[2..] {
                self.scaled_apply(&t_cur, &mut t_next);
                for i in 0..n {
                    t_next[i] = t_next[i] * 2.0 - t_prev[i];
                    out[i] += t_next[i] * c;
                }
                std::mem::swap(&mut t_prev, &mut t_cur);
                std::mem::swap(&mut t_cur, &mut t_next);
            }
        }
        let phase = Complex64::new(0.0, -self.center * dt).exp();
        out.iter_mut().for_each(|a| *a *= phase);
        out
    }

    /// `exp(-iH dt) psi`, split into substeps with `a * dt <= 100`.
    pub fn step(&self, psi: &[Complex64], dt: f64) -> Vec<Complex64> {
        if dt == 0.0 {
            return psi.to_vec();
        }
        let pieces = ((self.half_width * dt.abs()) / MAX_SCALED_STEP).ceil().max(1.0) as usize;
        let sub = dt / pieces as f64;
        let mut v = psi.to_vec();
        for _ in 0..pieces {
            v = self.single(&v, sub);
        }
        v
    }
}

/// Dense reference propagator from a full eigendecomposition.
#[derive(Debug, Clone)]
pub struct DensePropagator {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl DensePropagator {
    pub fn new(h: &SparseHermitian) -> Self {
        if h.is_real() {
            let eig = h.to_dense_real().symmetric_eigen();
            Self {
                eigenvalues: eig.eigenvalues.iter().copied().collect(),
                vectors: eig.eigenvectors.map(|v| Complex64::new(v, 0.0)),
            }
        } else {
            let eig = h.to_dense().symmetric_eigen();
            Self {
                eigenvalues: eig.eigenvalues.iter().copied().collect(),
                vectors: eig.eigenvectors,
            }
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    /// Coefficients of `psi` in the eigenbasis.
    pub fn spectral_weights(&self, psi: &[Complex64]) -> DVector<Complex64> {
        self.vectors.adjoint() * DVector::from_column_slice(psi)
    }

    pub fn evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let mut w = self.spectral_weights(psi);
        for (c, &e) in w.iter_mut().zip(&self.eigenvalues) {
            *c *= Complex64::new(0.0, -e * t).exp();
        }
        (&self.vectors * w).iter().copied().collect()
    }
}

/// States `exp(-iHt) psi0` for every requested time.
pub fn evolve(
    h: &SparseHermitian,
    psi0: &[Complex64],
    times: &[f64],
    method: Propagator,
) -> Result<Vec<Vec<Complex64>>> {
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: psi0.len(),
        });
    }
    h.check_hermitian()?;
    let dense = match method {
        Propagator::Dense => true,
        Propagator::Chebyshev => false,
        Propagator::Auto => h.dim() <= DENSE_AUTO_LIMIT,
    };
    if dense {
        let p = DensePropagator::new(h);
        return Ok(times
            .iter()
            .map(|&t| if t == 0.0 { psi0.to_vec() } else { p.evolve(psi0, t) })
            .collect());
    }
    let p = ChebyshevPropagator::new(h);
    let mut out = Vec::with_capacity(times.len());
    let (mut t_last, mut last) = (0.0, psi0.to_vec());
    for &t in times {
        let v = if t_last >= 0.0 && t >= t_last {
            p.step(&last, t - t_last)
        } else {
            p.step(psi0, t)
        };
        t_last = t;
        last = v.clone();
        out.push(v);
    }
    Ok(out)
}
