//! Crossing analysis of scan summaries and the Δ_c(n) phase diagram.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use toricloc::scaling::{
    collapse_points, phase_diagram, AnalysisOptions, CriticalPoint, DensityAnalysis, ScanResult,
    DISORDER_CONVENTION,
};
use toricloc::seed::seed_derive;

use super::{runtime, Context};
use crate::config::{require, Validate};
use crate::output::num;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub seed: u64,
    /// `scan_summary.json` files, one or more per density.
    pub inputs: Vec<PathBuf>,
    pub resamples: usize,
    pub drop_smallest: bool,
    /// Correlation exponent for data-collapse coordinates, if wanted.
    #[serde(default)]
    pub collapse_nu: Option<f64>,
}

impl Validate for AnalyzeConfig {
    fn validate(&self) -> Result<(), String> {
        require(!self.inputs.is_empty(), "inputs", "need at least one scan summary")?;
        require(self.resamples >= 10, "resamples", "must be at least 10")?;
        if let Some(nu) = self.collapse_nu {
            require(nu > 0.0 && nu.is_finite(), "collapse_nu", "must be positive")?;
        }
        Ok(())
    }
}

pub fn load_summary(path: &std::path::Path) -> Result<ScanResult, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut tree: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(obj) = tree.as_object_mut() {
        obj.remove("manifest");
    }
    serde_json::from_value(tree).map_err(|e| format!("{}: not a scan summary: {e}", path.display()))
}

/// Group curves by density, in ascending density order.
pub fn group(results: Vec<ScanResult>) -> Result<Vec<(f64, Vec<toricloc::scaling::ScalingCurve>)>, String> {
    let mut groups: Vec<(f64, Vec<toricloc::scaling::ScalingCurve>)> = Vec::new();
    for r in results {
        match groups.iter_mut().find(|(n, _)| *n == r.density) {
            Some((_, curves)) => {
                for c in r.curves {
                    if curves.iter().any(|d| d.size == c.size) {
                        return Err(format!("density {}: size {} appears twice", r.density, c.size));
                    }
                    curves.push(c);
                }
            }
            None => groups.push((r.density, r.curves)),
        }
    }
    for (_, curves) in &mut groups {
        curves.sort_by_key(|c| c.size);
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(groups)
}

fn critical_row(density: f64, mode: &str, fit: &Result<CriticalPoint, String>) -> Vec<String> {
    match fit {
        Ok(c) => vec![
            num(density),
            mode.into(),
            num(c.delta_c),
            num(c.stderr),
            num(2.0 * c.delta_c),
            num(c.chi2_dof),
            c.intersections.len().to_string(),
            String::new(),
        ],
        Err(e) => vec![
            num(density),
            mode.into(),
            "nan".into(),
            "nan".into(),
            "nan".into(),
            "nan".into(),
            "0".into(),
            e.replace([',', '\n'], ";"),
        ],
    }
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    disorder_convention: &'static str,
    resamples: usize,
    drop_smallest: bool,
    densities: &'a [DensityAnalysis],
}

pub fn run(tree: &Value, ctx: &mut Context) -> Result<(), CliError> {
    let config: AnalyzeConfig = ctx.resolve(tree)?;
    ctx.seed = Some(config.seed);
    let missing: Vec<String> = config
        .inputs
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Config(format!("missing inputs: {}", missing.join(", "))));
    }
    let results = config
        .inputs
        .iter()
        .map(|p| load_summary(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Config)?;
    let groups = group(results).map_err(CliError::Config)?;
    ctx.derived_seeds = (0..groups.len() as u64).map(|k| seed_derive(config.seed, k)).collect();
    let options = AnalysisOptions {
        resamples: config.resamples,
        seed: config.seed,
        drop_smallest: config.drop_smallest,
    };
    let analyses = phase_diagram(&groups, &options).map_err(runtime)?;
    let out = ctx.output()?;
    out.csv(
        "crossings.csv",
        &["density", "size_a", "size_b", "inverse_size", "delta", "stderr", "failed_resamples"],
        analyses.iter().flat_map(|a| {
            a.crossings.iter().map(move |c| {
                vec![
                    num(a.density),
                    c.sizes.0.to_string(),
                    c.sizes.1.to_string(),
                    num(1.0 / c.size_scale()),
                    num(c.delta),
                    num(c.stderr),
                    c.failed_resamples.to_string(),
                ]
            })
        }),
    )?;
    out.csv(
        "phase_diagram.csv",
        &["density", "mode", "delta_c", "stderr", "full_width", "chi2_dof", "intersections", "error"],
        analyses.iter().flat_map(|a| {
            [critical_row(a.density, "constant", &a.constant), critical_row(a.density, "linear", &a.linear)]
        }),
    )?;
    if let Some(nu) = config.collapse_nu {
        let mut rows = Vec::new();
        for (a, (_, curves)) in analyses.iter().zip(&groups) {
            if let Ok(c) = &a.constant {
                for curve in curves {
                    for (x, y, e) in collapse_points(curve, c.delta_c, nu) {
                        rows.push(vec![num(a.density), curve.size.to_string(), num(x), num(y), num(e)]);
                    }
                }
            }
        }
        out.csv("collapse.csv", &["density", "size", "x", "y", "stderr"], rows)?;
    }
    out.json(
        "analysis.json",
        &Report {
            disorder_convention: DISORDER_CONVENTION,
            resamples: config.resamples,
            drop_smallest: config.drop_smallest,
            densities: &analyses,
        },
    )
}
