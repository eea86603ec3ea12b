//! Small statistics helpers: means, binning, jackknife.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64) -> Self {
        Self { mean, stderr }
    }

    /// Number of standard errors separating the mean from `value`.
    pub fn sigmas_from(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.stderr
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Mean with the standard error of independent samples.
pub fn mean_and_error(xs: &[f64]) -> Estimate {
    if xs.len() < 2 {
        return Estimate::new(xs.first().copied().unwrap_or(f64::NAN), f64::NAN);
    }
    Estimate::new(mean(xs), (variance(xs) / xs.len() as f64).sqrt())
}

/// Jackknife estimate of `f(bin means)` from per-bin averages of several
/// observables. `bins[b][o]` is the mean of observable `o` in bin `b`.
pub fn jackknife(bins: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Estimate {
    let nb = bins.len();
    let no = bins.first().map_or(0, Vec::len);
    let total: Vec<f64> = (0..no).map(|o| bins.iter().map(|b| b[o]).sum()).collect();
    let full: Vec<f64> = total.iter().map(|t| t / nb as f64).collect();
    let center = f(&full);
    if nb < 2 {
        return Estimate::new(center, f64::NAN);
    }
    let leave_out: Vec<f64> = bins
        .iter()
        .map(|b| {
            let m: Vec<f64> = (0..no).map(|o| (total[o] - b[o]) / (nb - 1) as f64).collect();
            f(&m)
        })
        .collect();
    let lm = mean(&leave_out);
    let var = (nb - 1) as f64 / nb as f64 * leave_out.iter().map(|x| (x - lm).powi(2)).sum::<f64>();
    Estimate::new(center, var.sqrt())
}

/// Inverse-variance weighted mean.
pub fn weighted_mean(values: &[Estimate]) -> Estimate {
    let w: Vec<f64> = values.iter().map(|v| 1.0 / (v.stderr * v.stderr)).collect();
    let sw: f64 = w.iter().sum();
    let m = values.iter().zip(&w).map(|(v, w)| v.mean * w).sum::<f64>() / sw;
    Estimate::new(m, sw.sqrt().recip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_mean_matches_naive_error() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let bins: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let jk = jackknife(&bins, |m| m[0]);
        let naive = mean_and_error(&xs);
        assert!((jk.mean - naive.mean).abs() < 1e-12);
        assert!((jk.stderr - naive.stderr).abs() < 1e-12);
    }

    #[test]
    fn weighted_mean_of_equal_errors() {
        let w = weighted_mean(&[Estimate::new(1.0, 0.2), Estimate::new(3.0, 0.2)]);
        assert!((w.mean - 2.0).abs() < 1e-12);
        assert!((w.stderr - 0.2 / 2f64.sqrt()).abs() < 1e-12);
    }
}
