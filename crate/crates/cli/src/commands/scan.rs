//! Disorder scan at fixed density: ⟨W²⟩ against Δ for several sizes.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use toricloc::scaling::{run_scan, scan_seeds, ScanProtocol, ScanResult};

use super::{runtime, Context};
use crate::config::Validate;
use crate::output::num;
use crate::CliError;

pub const SUMMARY_FILE: &str = "scan_summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub seed: u64,
    pub protocol: ScanProtocol,
}

impl Validate for ScanConfig {
    fn validate(&self) -> Result<(), String> {
        self.protocol.validate().map_err(|e| format!("at `protocol`: {e}"))
    }
}

pub fn write_curves(out: &mut crate::output::OutputDir, result: &ScanResult) -> Result<(), CliError> {
    out.csv(
        "curves.csv",
        &["density", "size", "beta_rule", "beta", "delta", "winding_sq", "stderr", "realizations"],
        result.curves.iter().flat_map(|c| {
            c.points.iter().map(move |p| {
                vec![
                    num(c.density),
                    c.size.to_string(),
                    serde_json::to_value(c.beta_rule).expect("unit enum").as_str().expect("string").to_string(),
                    num(c.beta_rule.beta(c.size)),
                    num(p.delta),
                    num(p.winding_sq),
                    num(p.stderr),
                    p.realizations.to_string(),
                ]
            })
        }),
    )
}

pub fn run(tree: &Value, ctx: &mut Context) -> Result<(), CliError> {
    let config: ScanConfig = ctx.resolve(tree)?;
    ctx.seed = Some(config.seed);
    let p = &config.protocol;
    ctx.derived_seeds = p
        .sizes
        .iter()
        .flat_map(|&l| {
            (0..p.realizations).flat_map(move |r| {
                let (d, _) = scan_seeds(config.seed, l, r, 0);
                std::iter::once(d).chain((0..p.deltas.len()).map(move |k| scan_seeds(config.seed, l, r, k).1))
            })
        })
        .collect();
    let result = run_scan(p, config.seed).map_err(runtime)?;
    let out = ctx.output()?;
    out.csv(
        "runs.csv",
        &[
            "size", "beta", "delta", "realization", "disorder_seed", "chain_seed", "mu", "density", "density_err",
            "winding_sq", "winding_sq_err", "rho_s", "rho_s_err", "tune_runs", "thermalized", "error",
        ],
        result.runs.iter().map(|r| {
            vec![
                r.size.to_string(),
                num(r.beta),
                num(r.delta),
                r.realization.to_string(),
                r.disorder_seed.to_string(),
                r.chain_seed.to_string(),
                num(r.mu),
                num(r.density.mean),
                num(r.density.stderr),
                num(r.winding_sq.mean),
                num(r.winding_sq.stderr),
                num(r.rho_s.mean),
                num(r.rho_s.stderr),
                r.tune_runs.to_string(),
                r.thermalized.to_string(),
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            ]
        }),
    )?;
    write_curves(out, &result)?;
    out.json(SUMMARY_FILE, &result)
}
