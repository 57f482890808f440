//! Versioned JSON model files.
//!
//! Floats are written in shortest round-trip form, so loading a saved model
//! reproduces its predictions bit for bit and re-saving it reproduces the
//! file byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::causalgbm::LossKind;
use crate::error::{Result, UpliftError};
use crate::model::{Aggregation, BoosterConfig, BoosterKind, BoosterModel};
use crate::trees::UpliftTree;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u64,
    pub booster: BoosterKind,
    pub loss: Option<LossKind>,
    pub num_arms: usize,
    pub shrinkage: f64,
    pub aggregation: Aggregation,
    pub feature_names: Vec<String>,
    pub trees: Vec<UpliftTree>,
    pub config: BoosterConfig,
    pub seed: u64,
}

impl From<&BoosterModel> for ModelFile {
    fn from(m: &BoosterModel) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            booster: m.kind,
            loss: m.loss,
            num_arms: m.num_arms,
            shrinkage: m.shrinkage,
            aggregation: m.aggregation,
            feature_names: m.feature_names.clone(),
            trees: m.trees.clone(),
            config: m.config.clone(),
            seed: m.seed,
        }
    }
}

fn field_error(field: &str, message: impl std::fmt::Display) -> UpliftError {
    UpliftError::ModelFormat(format!("field `{field}`: {message}"))
}

impl TryFrom<ModelFile> for BoosterModel {
    type Error = UpliftError;

    fn try_from(f: ModelFile) -> Result<Self> {
        let config_kind = match f.config {
            BoosterConfig::Tddp(_) => BoosterKind::Tddp,
            BoosterConfig::Causalgbm(_) => BoosterKind::Causalgbm,
        };
        if config_kind != f.booster {
            return Err(field_error("config.booster", "does not match `booster`"));
        }
        let width = match (f.booster, f.loss) {
            (BoosterKind::Tddp, None) if f.num_arms == 1 => 1,
            (BoosterKind::Tddp, None) => return Err(field_error("num_arms", "tddp models have one treatment arm")),
            (BoosterKind::Tddp, Some(_)) => return Err(field_error("loss", "must be null for tddp models")),
            (BoosterKind::Causalgbm, Some(_)) if f.num_arms >= 1 => f.num_arms + 1,
            (BoosterKind::Causalgbm, Some(_)) => return Err(field_error("num_arms", "must be at least 1")),
            (BoosterKind::Causalgbm, None) => return Err(field_error("loss", "required for causalgbm models")),
        };
        if !(f.shrinkage > 0.0 && f.shrinkage <= 1.0) {
            return Err(field_error("shrinkage", "must lie in (0, 1]"));
        }
        if f.trees.is_empty() {
            return Err(field_error("trees", "model has no trees"));
        }
        for (i, tree) in f.trees.iter().enumerate() {
            if tree.leaf_values(0).len() != width {
                return Err(field_error(
                    &format!("trees[{i}].leaf_values"),
                    format!("expected {width} values per leaf"),
                ));
            }
            if tree.max_feature().is_some_and(|j| j >= f.feature_names.len()) {
                return Err(field_error(
                    &format!("trees[{i}].nodes"),
                    format!("split on a feature beyond the {} named ones", f.feature_names.len()),
                ));
            }
        }
        Ok(BoosterModel {
            kind: f.booster,
            loss: f.loss,
            num_arms: f.num_arms,
            shrinkage: f.shrinkage,
            aggregation: f.aggregation,
            feature_names: f.feature_names,
            trees: f.trees,
            config: f.config,
            seed: f.seed,
        })
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json(model: &BoosterModel) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ModelFile::from(model))
        .map_err(|e| UpliftError::ModelFormat(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<BoosterModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| UpliftError::ModelFormat(format!("not valid JSON: {e}")))?;
    let version = value
        .get("format_version")
        .ok_or_else(|| field_error("format_version", "missing"))?
        .as_u64()
        .ok_or_else(|| field_error("format_version", "must be a non-negative integer"))?;
    if version != FORMAT_VERSION {
        return Err(UpliftError::UnsupportedVersion { found: version, supported: FORMAT_VERSION });
    }
    let file: ModelFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        field_error(&path, e.into_inner())
    })?;
    BoosterModel::try_from(file)
}

fn with_path(e: std::io::Error, action: &str, path: &Path) -> UpliftError {
    std::io::Error::new(e.kind(), format!("cannot {action} {}: {e}", path.display())).into()
}

pub fn save(model: &BoosterModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(model)?).map_err(|e| with_path(e, "write", path))
}

pub fn load(path: impl AsRef<Path>) -> Result<BoosterModel> {
    let path = path.as_ref();
    from_json(&fs::read_to_string(path).map_err(|e| with_path(e, "read", path))?)
}
