//! Independent reference implementations used only by tests.

use nalgebra::{DMatrix, SymmetricEigen};

/// Neighbours of `(x, y)` on the L x L torus in the order +x, -x, +y, -y.
pub fn torus_neighbors(size: usize) -> Vec<[usize; 4]> {
    let idx = |x: usize, y: usize| (y % size) * size + (x % size);
    (0..size * size)
        .map(|s| {
            let (x, y) = (s % size, s / size);
            [
                idx(x + 1, y),
                idx(x + size - 1, y),
                idx(x, y + 1),
                idx(x, y + size - 1),
            ]
        })
        .collect()
}

/// Exact thermal averages of hard-core bosons,
/// `H = -t Σ_i Σ_d b†_{i+d} b_i - Σ_i (μ - ε_i) n_i`, by full diagonalization.
pub struct HardCoreBosonsEd {
    pub num_sites: usize,
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
    diagonal_n: Vec<f64>,
}

impl HardCoreBosonsEd {
    pub fn new(size: usize, hopping: f64, mu: f64, offsets: &[f64]) -> Self {
        let n = size * size;
        assert_eq!(offsets.len(), n);
        assert!(n <= 16, "ED limited to 16 sites");
        let dim = 1usize << n;
        let nb = torus_neighbors(size);
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut diagonal_n = vec![0.0; dim];
        for s in 0..dim {
            let mut diag = 0.0;
            for i in 0..n {
                if s >> i & 1 == 1 {
                    diag -= mu - offsets[i];
                    diagonal_n[s] += 1.0;
                    for &j in &nb[i] {
                        if s >> j & 1 == 0 {
                            let t = s & !(1 << i) | (1 << j);
                            h[(t, s)] -= hopping;
                        }
                    }
                }
            }
            h[(s, s)] += diag;
        }
        let eig = SymmetricEigen::new(h);
        Self {
            num_sites: n,
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
            diagonal_n,
        }
    }

    fn boltzmann(&self, beta: f64) -> Vec<f64> {
        let e0 = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        self.energies.iter().map(|e| (-beta * (e - e0)).exp()).collect()
    }

    /// `<H>` at inverse temperature `beta`.
    pub fn energy(&self, beta: f64) -> f64 {
        let w = self.boltzmann(beta);
        let z: f64 = w.iter().sum();
        w.iter().zip(&self.energies).map(|(w, e)| w * e).sum::<f64>() / z
    }

    /// Probability of each Fock state `|s>` on the imaginary-time slice:
    /// `<s| e^{-βH} |s> / Z`.
    pub fn diagonal_weights(&self, beta: f64) -> Vec<f64> {
        let w = self.boltzmann(beta);
        let z: f64 = w.iter().sum();
        let dim = w.len();
        (0..dim)
            .map(|s| (0..dim).map(|k| w[k] * self.vectors[(s, k)].powi(2)).sum::<f64>() / z)
            .collect()
    }

    /// Mean density `<N> / N_sites`.
    pub fn density(&self, beta: f64) -> f64 {
        let p = self.diagonal_weights(beta);
        p.iter().zip(&self.diagonal_n).map(|(p, n)| p * n).sum::<f64>() / self.num_sites as f64
    }

    /// `<n_i>` for every site.
    pub fn site_densities(&self, beta: f64) -> Vec<f64> {
        let p = self.diagonal_weights(beta);
        (0..self.num_sites)
            .map(|i| p.iter().enumerate().filter(|(s, _)| s >> i & 1 == 1).map(|(_, p)| p).sum())
            .collect()
    }
}

/// Periodic 1-norm distance between sites given as row-major indices.
pub fn torus_l1(a: usize, b: usize, size: usize) -> usize {
    let d = |u: usize, v: usize| {
        let k = u.abs_diff(v);
        k.min(size - k)
    };
    d(a % size, b % size) + d(a / size, b / size)
}

/// Minimum total distance over all perfect matchings, by exhaustive search.
pub fn brute_force_matching_cost(sites: &[usize], size: usize) -> usize {
    fn rec(rest: &[usize], size: usize) -> usize {
        if rest.is_empty() {
            return 0;
        }
        let a = rest[0];
        (1..rest.len())
            .map(|k| {
                let mut r: Vec<usize> = rest[1..].to_vec();
                let b = r.remove(k - 1);
                torus_l1(a, b, size) + rec(&r, size)
            })
            .min()
            .unwrap()
    }
    assert!(sites.len() % 2 == 0);
    rec(sites, size)
}
