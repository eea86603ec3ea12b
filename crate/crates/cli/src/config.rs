//! Loading, overriding and validating subcommand configurations.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use toricloc::effective::{dipolar_preset, field_preset};
use toricloc::geometry::LatticeGeometry;
use toricloc::pauli::PerturbationTerm;

use crate::manifest::Manifest;
use crate::CliError;

/// Raw configuration tree before it is bound to a subcommand schema.
#[derive(Debug, Clone)]
pub struct RawConfig {
    pub tree: Value,
    /// Set when the tree came from a previous run's manifest.
    pub from_manifest: bool,
}

/// Read a TOML config, or the resolved config inside a manifest JSON.
pub fn read_config(path: &Path, subcommand: &str) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: not a manifest: {e}", path.display())))?;
        if m.subcommand != subcommand {
            return Err(CliError::Config(format!(
                "manifest is for `{}`, not `{subcommand}`",
                m.subcommand
            )));
        }
        return Ok(RawConfig {
            tree: m.config,
            from_manifest: true,
        });
    }
    let value: toml::Value =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let tree = serde_json::to_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(RawConfig {
        tree,
        from_manifest: false,
    })
}

/// Apply a `dotted.key=value` override. The value is read as a TOML literal
/// and falls back to a bare string.
pub fn apply_override(tree: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => serde_json::to_value(t.remove("v").expect("parsed key"))
            .map_err(|e| CliError::Config(e.to_string()))?,
        Err(_) => Value::String(raw.trim().to_string()),
    };
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{}` is not a table", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

/// Bind a tree to a schema, reporting the failing field path.
pub fn bind<T: DeserializeOwned>(tree: &Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}

pub trait Validate {
    fn validate(&self) -> Result<(), String>;
}

pub fn check<T: Validate>(config: &T) -> Result<(), CliError> {
    config.validate().map_err(CliError::Config)
}

pub(crate) fn require(ok: bool, field: &str, msg: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("at `{field}`: {msg}"))
    }
}

/// Perturbation `V` acting on the edges of the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PerturbationConfig {
    /// `eta Σ_j σ_j · field`.
    Field { eta: f64, field: [f64; 3] },
    /// ZZ dipolar couplings `2 eta / r³` up to `cutoff`.
    Dipolar { eta: f64, cutoff: f64 },
    /// Explicit terms with edge indices.
    Terms { terms: Vec<PerturbationTerm> },
}

impl PerturbationConfig {
    pub fn terms(&self, geometry: &LatticeGeometry) -> toricloc::Result<Vec<PerturbationTerm>> {
        let terms = match self {
            Self::Field { eta, field } => field_preset(geometry, *eta, *field),
            Self::Dipolar { eta, cutoff } => dipolar_preset(geometry, *eta, *cutoff)?,
            Self::Terms { terms } => terms.clone(),
        };
        for t in &terms {
            t.check_edges(geometry)?;
        }
        Ok(terms)
    }

    pub fn validate(&self, field: &str) -> Result<(), String> {
        match self {
            Self::Field { eta, field: b } => {
                require(eta.is_finite(), &format!("{field}.eta"), "must be finite")?;
                require(b.iter().all(|x| x.is_finite()), &format!("{field}.field"), "must be finite")
            }
            Self::Dipolar { eta, cutoff } => {
                require(eta.is_finite(), &format!("{field}.eta"), "must be finite")?;
                require(*cutoff >= 1.0, &format!("{field}.cutoff"), "must be at least 1")
            }
            Self::Terms { .. } => Ok(()),
        }
    }
}
