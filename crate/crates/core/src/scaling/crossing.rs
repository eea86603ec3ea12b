use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Disorder convention of every curve produced here.
pub const DISORDER_CONVENTION: &str = "epsilon_i uniform on [-delta, delta]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    /// `β = L`.
    Linear,
    /// `β = L² / 16`.
    Quadratic,
}

impl BetaRule {
    pub fn beta(self, size: usize) -> f64 {
        let l = size as f64;
        match self {
            BetaRule::Linear => l,
            BetaRule::Quadratic => l * l / 16.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delta: f64,
    /// Disorder-averaged `<W²>`.
    pub winding_sq: f64,
    pub stderr: f64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub size: usize,
    pub beta_rule: BetaRule,
    pub density: f64,
    pub points: Vec<CurvePoint>,
}

impl ScalingCurve {
    pub fn new(size: usize, beta_rule: BetaRule, density: f64, points: Vec<CurvePoint>) -> Result<Self> {
        let c = Self {
            size,
            beta_rule,
            density,
            points,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "curve for L = {} has {} points",
                self.size,
                self.points.len()
            )));
        }
        if self.points.windows(2).any(|w| !(w[1].delta > w[0].delta)) {
            return Err(Error::InvalidParameter("curve deltas must be strictly increasing".into()));
        }
        if let Some(p) = self.points.iter().find(|p| !(p.stderr > 0.0) || p.realizations < 2) {
            return Err(Error::InvalidParameter(format!(
                "point at delta = {} needs a positive error from at least 2 realizations",
                p.delta
            )));
        }
        Ok(())
    }

    fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta).collect()
    }

    fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.winding_sq).collect()
    }
}

/// Piecewise interpolant: on each interval the cubic through the four
/// nearest points, or the chord when the curve has fewer than four.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let k = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    if n < 4 {
        let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
        return ys[k] + t * (ys[k + 1] - ys[k]);
    }
    let s = k.saturating_sub(1).min(n - 4);
    let mut acc = 0.0;
    for i in s..s + 4 {
        let mut w = 1.0;
        for j in s..s + 4 {
            if j != i {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 || b - a < 1e-13 * (1.0 + m.abs()) {
            return m;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// All sign changes of `f_b - f_a` on the common Δ range; touching zeros
/// without a sign change do not count.
fn crossings(xa: &[f64], ya: &[f64], xb: &[f64], yb: &[f64]) -> Vec<f64> {
    let lo = xa[0].max(xb[0]);
    let hi = xa[xa.len() - 1].min(xb[xb.len() - 1]);
    if !(hi > lo) {
        return Vec::new();
    }
    let mut knots: Vec<f64> = xa.iter().chain(xb).copied().filter(|&x| x > lo && x < hi).collect();
    knots.push(lo);
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let g = |x: f64| interpolate(xb, yb, x) - interpolate(xa, ya, x);
    let mut roots = Vec::new();
    // Last knot with a non-zero difference, and the first exact zero since.
    let mut prev: Option<(f64, f64)> = None;
    let mut zero: Option<f64> = None;
    for &x in &knots {
        let gx = g(x);
        if gx == 0.0 {
            zero = zero.or(Some(x));
            continue;
        }
        if let Some((px, pg)) = prev {
            if (gx > 0.0) != (pg > 0.0) {
                roots.push(match zero {
                    Some(z) => z,
                    None => bisect(&g, px, x, pg),
                });
            }
        }
        prev = Some((x, gx));
        zero = None;
    }
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub sizes: (usize, usize),
    pub delta: f64,
    pub stderr: f64,
    /// Bootstrap resamples without any crossing.
    pub failed_resamples: usize,
}

impl Crossing {
    /// Mean linear size of the pair.
    pub fn size_scale(&self) -> f64 {
        0.5 * (self.sizes.0 + self.sizes.1) as f64
    }
}

/// Crossing of the curves at `L` and `L' > L`, with a parametric bootstrap
/// over the point errors (`resamples` draws from `seed`).
pub fn intersection(a: &ScalingCurve, b: &ScalingCurve, resamples: usize, seed: u64) -> Result<Crossing> {
    a.validate()?;
    b.validate()?;
    let (xa, ya, xb, yb) = (a.xs(), a.ys(), b.xs(), b.ys());
    let roots = crossings(&xa, &ya, &xb, &yb);
    let center = match roots.len() {
        0 => return Err(Error::NoCrossing),
        1 => roots[0],
        _ => return Err(Error::AmbiguousCrossing { crossings: roots }),
    };
    let mut rng = rng_from_seed(seed);
    let noise = |c: &ScalingCurve, rng: &mut crate::seed::Rng| -> Vec<f64> {
        c.points
            .iter()
            .map(|p| p.winding_sq + p.stderr * Normal::new(0.0, 1.0).expect("unit normal").sample(rng))
            .collect()
    };
    let mut draws = Vec::with_capacity(resamples);
    let mut failed = 0;
    for _ in 0..resamples {
        let (ra, rb) = (noise(a, &mut rng), noise(b, &mut rng));
        let r = crossings(&xa, &ra, &xb, &rb);
        match r.iter().copied().min_by(|x, y| (x - center).abs().total_cmp(&(y - center).abs())) {
            Some(x) => draws.push(x),
            None => failed += 1,
        }
    }
    let stderr = if draws.len() >= 2 {
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        (draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(Crossing {
        sizes: (a.size, b.size),
        delta: center,
        stderr,
        failed_resamples: failed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Weighted mean of the crossings.
    Constant,
    /// Weighted straight line in `1 / L̄`, evaluated at `1 / L̄ = 0`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub density: f64,
    pub delta_c: f64,
    pub stderr: f64,
    pub mode: Extrapolation,
    /// Crossings entering the fit.
    pub intersections: Vec<Crossing>,
    /// Sizes excluded from the fit.
    pub dropped_sizes: Vec<usize>,
    /// Weighted residual sum of squares per degree of freedom; zero when the
    /// fit is exact.
    pub chi2_dof: f64,
}

/// Extrapolate crossing points to the thermodynamic limit.
pub fn extrapolate_critical(
    density: f64,
    intersections: &[Crossing],
    mode: Extrapolation,
    drop_smallest: bool,
) -> Result<CriticalPoint> {
    let smallest = intersections.iter().map(|c| c.sizes.0.min(c.sizes.1)).min();
    let dropped_sizes: Vec<usize> = if drop_smallest { smallest.into_iter().collect() } else { Vec::new() };
    let used: Vec<Crossing> = intersections
        .iter()
        .filter(|c| !dropped_sizes.contains(&c.sizes.0) && !dropped_sizes.contains(&c.sizes.1))
        .filter(|c| c.delta.is_finite() && c.stderr.is_finite() && c.stderr > 0.0)
        .copied()
        .collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable intersection points, need 2",
            used.len()
        )));
    }
    let w: Vec<f64> = used.iter().map(|c| c.stderr.powi(-2)).collect();
    let y: Vec<f64> = used.iter().map(|c| c.delta).collect();
    let (delta_c, stderr, chi2, dof) = match mode {
        Extrapolation::Constant => {
            let sw: f64 = w.iter().sum();
            let m = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
            let chi2 = w.iter().zip(&y).map(|(w, y)| w * (y - m).powi(2)).sum::<f64>();
            (m, sw.sqrt().recip(), chi2, used.len() - 1)
        }
        Extrapolation::Linear => {
            let x: Vec<f64> = used.iter().map(|c| 1.0 / c.size_scale()).collect();
            let s: f64 = w.iter().sum();
            let sx: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
            let sy: f64 = w.iter().zip(&y).map(|(w, y)| w * y).sum();
            let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * x * x).sum();
            let sxy: f64 = w.iter().zip(x.iter().zip(&y)).map(|(w, (x, y))| w * x * y).sum();
            let det = s * sxx - sx * sx;
            if !(det.abs() > 1e-300) {
                return Err(Error::InsufficientData("intersections share a single size scale".into()));
            }
            let a = (sxx * sy - sx * sxy) / det;
            let b = (s * sxy - sx * sy) / det;
            let chi2 = w
                .iter()
                .zip(x.iter().zip(&y))
                .map(|(w, (x, y))| w * (y - a - b * x).powi(2))
                .sum::<f64>();
            (a, (sxx / det).sqrt(), chi2, used.len() - 2)
        }
    };
    Ok(CriticalPoint {
        density,
        delta_c,
        stderr,
        mode,
        intersections: used,
        dropped_sizes,
        chi2_dof: if dof == 0 { 0.0 } else { chi2 / dof as f64 },
    })
}

/// Crossings of consecutive sizes (curves sorted by `L`). Failed pairs are
/// reported alongside the successful ones.
pub fn consecutive_crossings(
    curves: &[ScalingCurve],
    resamples: usize,
    seed: u64,
) -> (Vec<Crossing>, Vec<((usize, usize), Error)>) {
    let mut sorted: Vec<&ScalingCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.size);
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (k, pair) in sorted.windows(2).enumerate() {
        match intersection(pair[0], pair[1], resamples, crate::seed::seed_derive(seed, k as u64)) {
            Ok(c) => ok.push(c),
            Err(e) => failed.push(((pair[0].size, pair[1].size), e)),
        }
    }
    (ok, failed)
}

/// Data-collapse coordinates `(δ L^{1/ν}, ρ_s L)` with `δ = Δ - Δ_c` and
/// `ρ_s = <W²> / (2β)`.
pub fn collapse_points(curve: &ScalingCurve, delta_c: f64, nu: f64) -> Vec<(f64, f64, f64)> {
    let l = curve.size as f64;
    let beta = curve.beta_rule.beta(curve.size);
    curve
        .points
        .iter()
        .map(|p| {
            (
                (p.delta - delta_c) * l.powf(1.0 / nu),
                p.winding_sq / (2.0 * beta) * l,
                p.stderr / (2.0 * beta) * l,
            )
        })
        .collect()
}
