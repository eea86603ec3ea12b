//! Sup-amplitude localization profiles of a few defects in a disordered
//! potential.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use toricloc::dynamics::{
    average_profiles, fit_localization_length, integer_times, sup_amplitude_profile, DistanceMetric,
    LocalizationFit, LocalizationProfile, Propagator,
};
use toricloc::effective::{build_defect_hamiltonian, DefectType, DisorderField};
use toricloc::geometry::{Direction, LatticeGeometry, LatticePath, PathKind, Site};
use toricloc::seed::seed_derive;

use super::{runtime, Context};
use crate::config::{require, PerturbationConfig, Validate};
use crate::output::num;
use crate::CliError;

pub const POTENTIAL_CONVENTION: &str =
    "potential 2 J_s with J_s uniform on [1, 1 + delta/2]: uniform on [0, delta] up to a constant shift";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub seed: u64,
    pub size: usize,
    pub sector: DefectType,
    /// Initial defect positions as `[x, y]` star (or plaquette) coordinates.
    pub initial: Vec<[usize; 2]>,
    /// Width of the on-site potential distribution.
    pub delta: f64,
    /// Profiles take the supremum over the integer times `1..=t_max`.
    pub t_max: usize,
    pub realizations: usize,
    pub metric: DistanceMetric,
    #[serde(default)]
    pub propagator: Propagator,
    pub perturbation: PerturbationConfig,
    /// Optional dual string of a static magnetic pair (single electric defect).
    #[serde(default)]
    pub string: Option<StringConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringConfig {
    pub start: [usize; 2],
    pub direction: Direction,
    pub length: usize,
}

impl Validate for EvolveConfig {
    fn validate(&self) -> Result<(), String> {
        require(self.size >= 2, "size", "the torus needs L >= 2")?;
        require(!self.initial.is_empty(), "initial", "need at least one defect")?;
        require(
            self.initial.iter().all(|p| p[0] < self.size && p[1] < self.size),
            "initial",
            "coordinates must lie in [0, size)",
        )?;
        let mut idx: Vec<_> = self.initial.iter().map(|p| p[1] * self.size + p[0]).collect();
        idx.sort_unstable();
        idx.dedup();
        require(idx.len() == self.initial.len(), "initial", "positions must be distinct")?;
        require(self.delta >= 0.0 && self.delta.is_finite(), "delta", "must be finite and >= 0")?;
        require(self.t_max >= 1, "t_max", "must be at least 1")?;
        require(self.realizations >= 1, "realizations", "must be at least 1")?;
        require(
            self.metric != DistanceMetric::Relative || self.initial.len() == 2,
            "metric",
            "relative-1-norm needs exactly two defects",
        )?;
        self.perturbation.validate("perturbation")?;
        if let Some(s) = &self.string {
            require(
                self.initial.len() == 1 && self.sector == DefectType::Electric,
                "string",
                "needs a single electric defect",
            )?;
            require(s.start[0] < self.size && s.start[1] < self.size, "string.start", "outside the lattice")?;
            require(s.length >= 1, "string.length", "must be at least 1")?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    potential_convention: &'static str,
    delta: f64,
    metric: DistanceMetric,
    t_max: usize,
    realizations: usize,
    disorder_seeds: &'a [u64],
    /// Fit of the realization-averaged envelope.
    fit: Option<LocalizationFit>,
    fit_error: Option<String>,
    per_realization: Vec<Option<LocalizationFit>>,
}

pub fn profiles(config: &EvolveConfig, seeds: &[u64]) -> toricloc::Result<Vec<LocalizationProfile>> {
    let g = LatticeGeometry::torus(config.size)?;
    let terms = config.perturbation.terms(&g)?;
    let x0: Vec<usize> = config.initial.iter().map(|p| g.index(Site::new(p[0], p[1]))).collect();
    let times = integer_times(config.t_max);
    seeds
        .par_iter()
        .map(|&s| {
            let disorder = DisorderField::for_potential_width(&g, config.delta, s)?;
            let mut h = build_defect_hamiltonian(&g, &terms, &disorder, x0.len(), config.sector)?;
            if let Some(st) = &config.string {
                let start = g.index(Site::new(st.start[0], st.start[1]));
                h = h.attach_braiding_string(&LatticePath::straight(&g, PathKind::Dual, start, st.direction, st.length))?;
            }
            sup_amplitude_profile(&h, &x0, &times, config.metric, config.propagator)
        })
        .collect()
}

pub fn run(tree: &Value, ctx: &mut Context) -> Result<(), CliError> {
    let config: EvolveConfig = ctx.resolve(tree)?;
    ctx.seed = Some(config.seed);
    let seeds: Vec<u64> = (0..config.realizations as u64).map(|r| seed_derive(config.seed, r)).collect();
    ctx.derived_seeds = seeds.clone();
    let profiles = profiles(&config, &seeds).map_err(runtime)?;
    let mean = average_profiles(&profiles).map_err(runtime)?;
    let (fit, fit_error) = match fit_localization_length(&mean) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let g = LatticeGeometry::torus(config.size).map_err(runtime)?;
    let basis = {
        let disorder = DisorderField::clean(&g);
        let terms = config.perturbation.terms(&g).map_err(runtime)?;
        build_defect_hamiltonian(&g, &terms, &disorder, config.initial.len(), config.sector).map_err(runtime)?
    };
    let label = |c: usize| -> String {
        basis.basis()[c]
            .sites()
            .iter()
            .map(|&s| {
                let p = g.site(s);
                format!("{}:{}", p.x, p.y)
            })
            .collect::<Vec<_>>()
            .join(";")
    };
    let out = ctx.output()?;
    out.csv(
        "profile.csv",
        &["realization", "configuration", "sites", "distance", "amplitude"],
        profiles.iter().enumerate().flat_map(|(r, p)| {
            p.points.iter().map(move |pt| {
                vec![
                    r.to_string(),
                    pt.configuration.to_string(),
                    label(pt.configuration),
                    pt.distance.to_string(),
                    num(pt.amplitude),
                ]
            })
        }),
    )?;
    out.csv(
        "envelope.csv",
        &["distance", "amplitude", "realizations"],
        mean.envelope
            .iter()
            .map(|b| vec![b.distance.to_string(), num(b.amplitude), mean.realizations.to_string()]),
    )?;
    out.json(
        "fit.json",
        &FitReport {
            potential_convention: POTENTIAL_CONVENTION,
            delta: config.delta,
            metric: config.metric,
            t_max: config.t_max,
            realizations: config.realizations,
            disorder_seeds: &seeds,
            fit,
            fit_error,
            per_realization: profiles.iter().map(|p| fit_localization_length(p).ok()).collect(),
        },
    )
}
