//! Unitary evolution of defect wavefunctions and localization diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::effective::HoppingHamiltonian;
use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, periodic_l1_distance, Site};
pub use crate::propagate::{evolve, Propagator};

/// Envelope values below this are treated as numerically zero by the fit.
pub const FIT_FLOOR: f64 = 1e-12;
/// Slopes above this count as flat.
pub const FLAT_SLOPE: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMetric {
    /// `||y_1 - y_2||_1 - 1` of a two-defect configuration.
    #[serde(rename = "relative-1-norm")]
    Relative,
    /// Hausdorff distance from the initial configuration.
    #[serde(rename = "hausdorff")]
    Hausdorff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub configuration: usize,
    pub distance: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBin {
    pub distance: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationProfile {
    pub metric: DistanceMetric,
    pub t_max: f64,
    pub realizations: usize,
    /// One point per basis configuration; empty for averaged profiles.
    pub points: Vec<ProfilePoint>,
    /// Largest amplitude per distance bin, ascending in distance.
    pub envelope: Vec<EnvelopeBin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationFit {
    pub amplitude: f64,
    /// Localization length; infinite when delocalized.
    pub xi: f64,
    pub slope: f64,
    /// RMS residual of the log-envelope fit.
    pub residual: f64,
    pub bins: usize,
    pub delocalized: bool,
}

pub fn basis_state(dim: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Integer grid `1..=t_max`.
pub fn integer_times(t_max: usize) -> Vec<f64> {
    (1..=t_max).map(|t| t as f64).collect()
}

fn configuration_distance(
    metric: DistanceMetric,
    size: usize,
    x0: &[usize],
    y: &[usize],
) -> Result<usize> {
    let site = |s: usize| Site::new(s % size, s / size);
    match metric {
        DistanceMetric::Relative => {
            if y.len() != 2 {
                return Err(Error::InvalidParameter(format!(
                    "relative distance needs two defects, have {}",
                    y.len()
                )));
            }
            Ok(periodic_l1_distance(site(y[0]), site(y[1]), size) - 1)
        }
        DistanceMetric::Hausdorff => {
            let xs: Vec<Site> = x0.iter().map(|&s| site(s)).collect();
            let ys: Vec<Site> = y.iter().map(|&s| site(s)).collect();
            hausdorff_distance(&xs, &ys, size)
        }
    }
}

/// `sup_t |<y| exp(-iHt) |x0>|` for every configuration `y`, binned by `metric`.
pub fn sup_amplitude_profile(
    h: &HoppingHamiltonian,
    x0: &[usize],
    times: &[f64],
    metric: DistanceMetric,
    method: Propagator,
) -> Result<LocalizationProfile> {
    let start = h.index_of(x0)?;
    let states = evolve(&h.to_sparse(), &basis_state(h.dim(), start), times, method)?;
    let mut sup = vec![0.0f64; h.dim()];
    for psi in &states {
        for (s, a) in sup.iter_mut().zip(psi) {
            *s = s.max(a.norm());
        }
    }
    let mut points = Vec::with_capacity(h.dim());
    for (i, c) in h.basis().iter().enumerate() {
        points.push(ProfilePoint {
            configuration: i,
            distance: configuration_distance(metric, h.size(), x0, c.sites())?,
            amplitude: sup[i],
        });
    }
    let envelope = envelope_of(&points);
    Ok(LocalizationProfile {
        metric,
        t_max: times.iter().copied().fold(0.0, f64::max),
        realizations: 1,
        points,
        envelope,
    })
}

fn envelope_of(points: &[ProfilePoint]) -> Vec<EnvelopeBin> {
    let max_d = points.iter().map(|p| p.distance).max().unwrap_or(0);
    let mut best = vec![None::<f64>; max_d + 1];
    for p in points {
        let b = &mut best[p.distance];
        *b = Some(b.map_or(p.amplitude, |v| v.max(p.amplitude)));
    }
    best.into_iter()
        .enumerate()
        .filter_map(|(distance, a)| a.map(|amplitude| EnvelopeBin { distance, amplitude }))
        .collect()
}

/// Bin-wise mean of envelopes from independent realizations.
pub fn average_profiles(profiles: &[LocalizationProfile]) -> Result<LocalizationProfile> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::InsufficientData("no profiles to average".into()))?;
    let mut sums: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for p in profiles {
        if p.metric != first.metric {
            return Err(Error::InvalidParameter("profiles use different metrics".into()));
        }
        for b in &p.envelope {
            let e = sums.entry(b.distance).or_insert((0.0, 0));
            e.0 += b.amplitude;
            e.1 += 1;
        }
    }
    Ok(LocalizationProfile {
        metric: first.metric,
        t_max: first.t_max,
        realizations: profiles.iter().map(|p| p.realizations).sum(),
        points: Vec::new(),
        envelope: sums
            .into_iter()
            .map(|(distance, (s, n))| EnvelopeBin {
                distance,
                amplitude: s / n as f64,
            })
            .collect(),
    })
}

/// `Σ_{x ∈ region} |psi(x)|²`.
pub fn escape_probability(psi: &[Complex64], region: &[usize]) -> f64 {
    region.iter().map(|&i| psi[i].norm_sqr()).sum()
}

/// Least-squares fit of `ln envelope = ln A - d / xi` over bins above
/// [`FIT_FLOOR`].
pub fn fit_localization_length(profile: &LocalizationProfile) -> Result<LocalizationFit> {
    fit_envelope(&profile.envelope, FIT_FLOOR)
}

pub fn fit_envelope(envelope: &[EnvelopeBin], floor: f64) -> Result<LocalizationFit> {
    let pts: Vec<(f64, f64)> = envelope
        .iter()
        .filter(|b| b.amplitude > floor)
        .map(|b| (b.distance as f64, b.amplitude.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} envelope bins above {floor:e}, need 4",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let delocalized = slope > FLAT_SLOPE;
    Ok(LocalizationFit {
        amplitude: intercept.exp(),
        xi: if delocalized { f64::INFINITY } else { -1.0 / slope },
        slope,
        residual,
        bins: pts.len(),
        delocalized,
    })
}
