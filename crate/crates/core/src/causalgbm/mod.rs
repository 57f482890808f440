//! CausalGBM: second-order boosting of potential outcomes and effects.
//!
//! A row's margin is `sum_m [v_m(x) + u_{m,w}(x)]` with `u_{m,0} = 0`, so the
//! `v` part models the control outcome and `u_a` the effect of arm `a`. Each
//! iteration grows one tree whose leaves carry `[v, u_1, .., u_K]`:
//!
//! * `v = -G_0 / (H_0 + lambda)` from the control rows of the leaf,
//! * `u_a = -(G_a + v H_a) / (H_a + lambda)` from the rows of arm `a`,
//!
//! where `G_a`, `H_a` are the gradient and hessian sums of arm `a`. The leaf
//! loss evaluated at these weights,
//! `G v + (H + lambda) v^2 / 2 - sum_a (G_a + v H_a)^2 / (2 (H_a + lambda))`,
//! scores splits by its reduction.

mod loss;

use serde::{Deserialize, Serialize};

use crate::dataset::{bin_features, BinnedDataset, Matrix, UpliftDataset};
use crate::error::{Result, UpliftError};
use crate::model::{Aggregation, BoosterKind, BoosterModel, EnsembleMode, Scale, BoosterConfig};
use crate::tddp::stratified_bootstrap;
use crate::trees::{grow_tree, ArmStats, GrowthConfig, RowStat, SplitCriterion, UpliftTree};

pub use loss::{grad_hess, sigmoid, LossKind, HESSIAN_FLOOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalConfig {
    pub num_trees: usize,
    pub shrinkage: f64,
    pub loss: LossKind,
    pub growth: GrowthConfig,
    pub ensemble_mode: EnsembleMode,
    pub max_bins: usize,
    pub seed: u64,
}

impl Default for CausalConfig {
    fn default() -> Self {
        CausalConfig {
            num_trees: 100,
            shrinkage: 0.1,
            loss: LossKind::Squared,
            growth: GrowthConfig::default(),
            ensemble_mode: EnsembleMode::Boosting,
            max_bins: 255,
            seed: 0,
        }
    }
}

impl CausalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees < 1 {
            return Err(UpliftError::config("trees", "need at least one tree"));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(UpliftError::config("shrinkage", format!("must lie in (0, 1], got {}", self.shrinkage)));
        }
        if !(2..=65535).contains(&self.max_bins) {
            return Err(UpliftError::config("max_bins", "must be in [2, 65535]"));
        }
        self.growth.validate()
    }
}

/// Optimal leaf weights: baseline `v` and one effect per treatment arm.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafWeights {
    pub v: f64,
    pub u: Vec<f64>,
}

fn denominator(arm: &ArmStats, lambda: f64, which: usize) -> Result<f64> {
    let d = arm.sum_h + lambda;
    if d > 0.0 {
        Ok(d)
    } else {
        Err(UpliftError::DegenerateLeaf(format!(
            "arm {which} has hessian sum {} over {} rows",
            arm.sum_h, arm.count
        )))
    }
}

/// `stats[a]` holds the gradient/hessian sums of arm `a`, control first.
pub fn leaf_weights(stats: &[ArmStats], lambda: f64) -> Result<LeafWeights> {
    let v = -stats[0].sum_g / denominator(&stats[0], lambda, 0)?;
    let u = stats[1..]
        .iter()
        .enumerate()
        .map(|(i, s)| Ok(-(s.sum_g + v * s.sum_h) / denominator(s, lambda, i + 1)?))
        .collect::<Result<_>>()?;
    Ok(LeafWeights { v, u })
}

pub fn leaf_loss(stats: &[ArmStats], lambda: f64) -> Result<f64> {
    let v = -stats[0].sum_g / denominator(&stats[0], lambda, 0)?;
    let (g_all, h_all) = stats
        .iter()
        .fold((0.0, 0.0), |(g, h), s| (g + s.sum_g, h + s.sum_h));
    let mut loss = g_all * v + 0.5 * (h_all + lambda) * v * v;
    for (i, s) in stats[1..].iter().enumerate() {
        let num = s.sum_g + v * s.sum_h;
        loss -= num * num / (2.0 * denominator(s, lambda, i + 1)?);
    }
    Ok(loss)
}

/// Loss reduction `L(parent) - L(left) - L(right)`.
pub fn split_gain(parent: &[ArmStats], left: &[ArmStats], right: &[ArmStats], lambda: f64) -> Result<f64> {
    Ok(leaf_loss(parent, lambda)? - leaf_loss(left, lambda)? - leaf_loss(right, lambda)?)
}

struct CausalCriterion {
    shrinkage: f64,
    lambda: f64,
}

impl SplitCriterion for CausalCriterion {
    fn node_score(&self, stats: &[ArmStats]) -> f64 {
        leaf_loss(stats, self.lambda).unwrap_or(f64::NAN)
    }

    fn gain(&self, parent_score: f64, left: &[ArmStats], right: &[ArmStats]) -> f64 {
        match (leaf_loss(left, self.lambda), leaf_loss(right, self.lambda)) {
            (Ok(l), Ok(r)) => parent_score - l - r,
            _ => f64::NEG_INFINITY,
        }
    }

    fn leaf_value(&self, stats: &[ArmStats]) -> Result<Vec<f64>> {
        let w = leaf_weights(stats, self.lambda)?;
        let mut out = Vec::with_capacity(w.u.len() + 1);
        out.push(self.shrinkage * w.v);
        out.extend(w.u.iter().map(|u| self.shrinkage * u));
        Ok(out)
    }
}

/// Per-iteration progress reported by [`fit_causalgbm_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalIteration {
    pub iteration: usize,
    pub num_leaves: usize,
    /// Mean training loss of the ensemble after this iteration.
    pub train_loss: f64,
}

fn mean_loss(loss: LossKind, y: &[f64], margin: &[f64]) -> f64 {
    y.iter().zip(margin).map(|(&yi, &m)| loss.value(yi, m)).sum::<f64>() / y.len() as f64
}

fn row_stats(loss: LossKind, y: &[f64], margin: &[f64], treatment: &[usize]) -> Vec<RowStat> {
    grad_hess(loss, y, margin)
        .into_iter()
        .zip(treatment)
        .map(|((g, h), &arm)| RowStat { arm, g, h })
        .collect()
}

pub fn fit_causalgbm(data: &UpliftDataset, cfg: &CausalConfig) -> Result<BoosterModel> {
    fit_causalgbm_with(data, cfg, |_| {})
}

pub fn fit_causalgbm_with(
    data: &UpliftDataset,
    cfg: &CausalConfig,
    mut on_iteration: impl FnMut(CausalIteration),
) -> Result<BoosterModel> {
    cfg.validate()?;
    if cfg.loss == LossKind::Logistic && data.outcome().iter().any(|y| !(0.0..=1.0).contains(y)) {
        return Err(UpliftError::Unsupported("logistic loss needs outcomes in [0, 1]".into()));
    }
    let binned = bin_features(data, cfg.max_bins)?;
    let trees = match cfg.ensemble_mode {
        EnsembleMode::Boosting => boost(data, &binned, cfg, &mut on_iteration)?,
        EnsembleMode::Bagging => bag(data, &binned, cfg, &mut on_iteration)?,
    };
    Ok(BoosterModel {
        kind: BoosterKind::Causalgbm,
        loss: Some(cfg.loss),
        num_arms: data.num_arms(),
        shrinkage: cfg.shrinkage,
        aggregation: Aggregation::from(cfg.ensemble_mode),
        feature_names: data.feature_names().to_vec(),
        trees,
        config: BoosterConfig::Causalgbm(cfg.clone()),
        seed: cfg.seed,
    })
}

fn boost(
    data: &UpliftDataset,
    binned: &BinnedDataset,
    cfg: &CausalConfig,
    on_iteration: &mut impl FnMut(CausalIteration),
) -> Result<Vec<UpliftTree>> {
    let criterion = CausalCriterion { shrinkage: cfg.shrinkage, lambda: cfg.growth.lambda };
    let (y, w) = (data.outcome(), data.treatment());
    let mut margin = vec![0.0; data.len()];
    let mut trees = Vec::with_capacity(cfg.num_trees);
    for iteration in 0..cfg.num_trees {
        let stats = row_stats(cfg.loss, y, &margin, w);
        let grown = grow_tree(binned, (0..data.len()).collect(), &stats, data.num_arms(), &criterion, &cfg.growth)?;
        for (leaf, rows) in grown.leaf_rows.iter().enumerate() {
            let values = grown.tree.leaf_values(leaf);
            for &r in rows {
                margin[r] += values[0] + if w[r] > 0 { values[w[r]] } else { 0.0 };
            }
        }
        on_iteration(CausalIteration {
            iteration,
            num_leaves: grown.tree.num_leaves(),
            train_loss: mean_loss(cfg.loss, y, &margin),
        });
        trees.push(grown.tree);
    }
    Ok(trees)
}

fn bag(
    data: &UpliftDataset,
    binned: &BinnedDataset,
    cfg: &CausalConfig,
    on_iteration: &mut impl FnMut(CausalIteration),
) -> Result<Vec<UpliftTree>> {
    let criterion = CausalCriterion { shrinkage: 1.0, lambda: cfg.growth.lambda };
    let (y, w) = (data.outcome(), data.treatment());
    let stats = row_stats(cfg.loss, y, &vec![0.0; data.len()], w);
    let mut margin_sum = vec![0.0; data.len()];
    let mut trees = Vec::with_capacity(cfg.num_trees);
    for iteration in 0..cfg.num_trees {
        let rows = stratified_bootstrap(w, data.num_arms(), cfg.seed, iteration as u64);
        let grown = grow_tree(binned, rows, &stats, data.num_arms(), &criterion, &cfg.growth)?;
        for (i, row) in data.features().rows_iter().enumerate() {
            let values = grown.tree.leaf_values(grown.tree.predict_leaf(row));
            margin_sum[i] += values[0] + if w[i] > 0 { values[w[i]] } else { 0.0 };
        }
        let k = (iteration + 1) as f64;
        let margin: Vec<f64> = margin_sum.iter().map(|m| m / k).collect();
        on_iteration(CausalIteration {
            iteration,
            num_leaves: grown.tree.num_leaves(),
            train_loss: mean_loss(cfg.loss, y, &margin),
        });
        trees.push(grown.tree);
    }
    Ok(trees)
}

fn require_causal(model: &BoosterModel) -> Result<LossKind> {
    match (model.kind, model.loss) {
        (BoosterKind::Causalgbm, Some(loss)) => Ok(loss),
        _ => Err(UpliftError::Unsupported(
            "outcome predictions need a causalgbm model".into(),
        )),
    }
}

/// Effects of every arm: an `n x K` matrix.
///
/// On the margin scale this is `sum_m u_{m,a}(x)`. On the probability scale
/// (logistic loss) it is `sigmoid(f + u_a) - sigmoid(f)`; for the squared
/// loss both scales coincide.
pub fn predict_effect(model: &BoosterModel, rows: &Matrix, scale: Scale) -> Result<Matrix> {
    let loss = require_causal(model)?;
    let sums = model.aggregate_leaf_values(rows)?;
    let k = model.num_arms;
    let mut out = Matrix::zeros(rows.nrows(), k);
    for (i, s) in sums.iter().enumerate() {
        for a in 1..=k {
            let effect = match scale {
                Scale::Margin => s[a],
                Scale::Probability => loss.link_inverse(s[0] + s[a]) - loss.link_inverse(s[0]),
            };
            out.set(i, a - 1, effect);
        }
    }
    Ok(out)
}

/// Predicted outcome of every row under `arm` (0 = control).
pub fn predict_outcome(model: &BoosterModel, rows: &Matrix, arm: usize, scale: Scale) -> Result<Vec<f64>> {
    let loss = require_causal(model)?;
    if arm > model.num_arms {
        return Err(UpliftError::UnknownArm { arm, max_arm: model.num_arms });
    }
    Ok(model
        .aggregate_leaf_values(rows)?
        .into_iter()
        .map(|s| {
            let margin = if arm == 0 { s[0] } else { s[0] + s[arm] };
            match scale {
                Scale::Margin => margin,
                Scale::Probability => loss.link_inverse(margin),
            }
        })
        .collect())
}
