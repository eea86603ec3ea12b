//! Ballistic escape of a relative-coordinate wavepacket on one momentum fiber.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use toricloc::geometry::LatticeGeometry;
use toricloc::relative_motion::{ballistic_escape_probe, build_fiber, nearest_neighbor_templates, EscapeReport};
use toricloc::seed::seed_derive;

use super::{runtime, Context};
use crate::config::{require, Validate};
use crate::output::num;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeConfig {
    pub seed: u64,
    /// Centre-of-mass momentum of the fiber.
    pub k: [f64; 2],
    /// Coefficient of the nearest-neighbour single-edge Z terms.
    pub hopping: f64,
    /// Torus on which the templates are laid out; only its size matters.
    pub template_size: usize,
    /// Box `||l||_∞ <= radius` of relative displacements.
    pub radius: usize,
    #[serde(default)]
    pub interaction: Option<InteractionConfig>,
    pub packet: PacketConfig,
    /// The region Λ is `||l||_∞ <= region_half`.
    pub region_half: usize,
    pub threshold: f64,
    /// Radius around the origin that the packet is taken to occupy when
    /// bounding the reflection time.
    pub extent: f64,
    /// Number of equally spaced sample times.
    pub samples: usize,
    /// Last sample time; the reflection time when absent.
    #[serde(default)]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    pub support: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub sigma: f64,
    pub q: [f64; 2],
}

impl Validate for RelativeConfig {
    fn validate(&self) -> Result<(), String> {
        require(self.k.iter().all(|x| x.is_finite()), "k", "must be finite")?;
        require(self.hopping.is_finite() && self.hopping != 0.0, "hopping", "must be finite and nonzero")?;
        require(self.template_size >= 4, "template_size", "must be at least 4")?;
        require(self.radius >= 2, "radius", "must be at least 2")?;
        require(self.region_half < self.radius, "region_half", "must be smaller than radius")?;
        if let Some(i) = &self.interaction {
            require(i.support >= 0.0 && i.support.is_finite(), "interaction.support", "must be >= 0")?;
            require(i.strength.is_finite(), "interaction.strength", "must be finite")?;
        }
        require(self.packet.sigma > 0.0, "packet.sigma", "must be positive")?;
        require(self.threshold > 0.0 && self.threshold < 1.0, "threshold", "must lie in (0, 1)")?;
        require(self.extent >= 0.0, "extent", "must be >= 0")?;
        require(self.samples >= 1, "samples", "must be at least 1")?;
        if let Some(t) = self.t_max {
            require(t > 0.0 && t.is_finite(), "t_max", "must be positive")?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct ProbeReport<'a> {
    velocity_bound: f64,
    escaped: bool,
    interaction_seed: Option<u64>,
    #[serde(flatten)]
    report: &'a EscapeReport,
}

pub fn probe(config: &RelativeConfig) -> toricloc::Result<(EscapeReport, f64)> {
    let g = LatticeGeometry::torus(config.template_size)?;
    let templates = nearest_neighbor_templates(&g, config.hopping);
    let mut fiber = build_fiber(config.k, &templates, &g, config.radius)?;
    if let Some(i) = &config.interaction {
        fiber = fiber.with_random_interaction(i.support, i.strength, seed_derive(config.seed, 0))?;
    }
    let psi = fiber.gaussian_packet(config.packet.sigma, config.packet.q);
    let region = fiber.central_block(config.region_half);
    let t_end = config.t_max.unwrap_or_else(|| fiber.reflection_time(config.extent));
    if !t_end.is_finite() {
        return Err(toricloc::Error::InvalidParameter("no reflection bound; set t_max".into()));
    }
    let times: Vec<f64> = (1..=config.samples).map(|i| t_end * i as f64 / config.samples as f64).collect();
    let report = ballistic_escape_probe(&fiber, &psi, &times, &region, config.extent, config.threshold)?;
    Ok((report, fiber.velocity_bound()))
}

pub fn run(tree: &Value, ctx: &mut Context) -> Result<(), CliError> {
    let config: RelativeConfig = ctx.resolve(tree)?;
    ctx.seed = Some(config.seed);
    let interaction_seed = config.interaction.map(|_| seed_derive(config.seed, 0));
    ctx.derived_seeds = interaction_seed.into_iter().collect();
    let (report, velocity_bound) = probe(&config).map_err(runtime)?;
    let out = ctx.output()?;
    out.csv(
        "escape.csv",
        &["time", "in_region", "pre_reflection"],
        report.times.iter().zip(&report.in_region).map(|(&t, &p)| {
            vec![num(t), num(p), (t <= report.reflection_time).to_string()]
        }),
    )?;
    out.json(
        "probe.json",
        &ProbeReport {
            velocity_bound,
            escaped: report.escaped(),
            interaction_seed,
            report: &report,
        },
    )
}
