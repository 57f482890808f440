//! Fitted tree ensembles.

use serde::{Deserialize, Serialize};

use crate::causalgbm::{CausalConfig, LossKind};
use crate::dataset::Matrix;
use crate::error::{Result, UpliftError};
use crate::tddp::TddpConfig;
use crate::trees::UpliftTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoosterKind {
    Tddp,
    Causalgbm,
}

/// How trees are fitted relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    /// Sequential fitting on updated labels or gradients, with shrinkage.
    #[default]
    Boosting,
    /// Labels or gradients frozen at the start; every tree is fitted on its
    /// own bootstrap sample and predictions are averaged.
    Bagging,
}

/// How per-tree leaf values combine into a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Sum,
    Mean,
}

impl From<EnsembleMode> for Aggregation {
    fn from(mode: EnsembleMode) -> Self {
        match mode {
            EnsembleMode::Boosting => Aggregation::Sum,
            EnsembleMode::Bagging => Aggregation::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Raw model output (log-odds for the logistic loss).
    #[default]
    Margin,
    Probability,
}

/// Training configuration recorded alongside a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "booster", rename_all = "lowercase")]
pub enum BoosterConfig {
    Tddp(TddpConfig),
    Causalgbm(CausalConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoosterModel {
    pub kind: BoosterKind,
    /// Only set for CausalGBM.
    pub loss: Option<LossKind>,
    /// Treatment arms excluding control.
    pub num_arms: usize,
    pub shrinkage: f64,
    pub aggregation: Aggregation,
    pub feature_names: Vec<String>,
    /// Leaf values already include shrinkage.
    pub trees: Vec<UpliftTree>,
    pub config: BoosterConfig,
    pub seed: u64,
}

impl BoosterModel {
    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub(crate) fn check_input(&self, rows: &Matrix) -> Result<()> {
        if self.trees.is_empty() {
            return Err(UpliftError::Unsupported("model has no trees".into()));
        }
        if rows.ncols() != self.num_features() {
            return Err(UpliftError::Shape {
                what: "features",
                expected: self.num_features(),
                found: rows.ncols(),
            });
        }
        Ok(())
    }

    /// Sum (or mean) over trees of each row's leaf value vector.
    pub(crate) fn aggregate_leaf_values(&self, rows: &Matrix) -> Result<Vec<Vec<f64>>> {
        self.check_input(rows)?;
        let width = self.trees[0].leaf_values(0).len();
        let divisor = match self.aggregation {
            Aggregation::Sum => None,
            Aggregation::Mean => Some(self.trees.len() as f64),
        };
        Ok(rows
            .rows_iter()
            .map(|row| {
                let mut acc = vec![0.0; width];
                for tree in &self.trees {
                    let leaf = tree.predict_leaf(row);
                    for (a, v) in acc.iter_mut().zip(tree.leaf_values(leaf)) {
                        *a += v;
                    }
                }
                if let Some(d) = divisor {
                    acc.iter_mut().for_each(|a| *a /= d);
                }
                acc
            })
            .collect())
    }
}
