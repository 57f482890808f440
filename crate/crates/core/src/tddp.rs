//! TDDP: boosted uplift trees on transformed labels.
//!
//! Every round grows a tree that maximizes the weighted squared difference in
//! estimated uplift between the two children, sets each leaf to
//! `alpha * (mean treated label - mean control label)`, and then subtracts the
//! tree's output from the working labels of treated rows. After `m` rounds a
//! treated row's working label is `y - u_m(x)`, where `u_m` is the sum of the
//! first `m` trees, while control labels never change.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{bin_features, BinnedDataset, Matrix, UpliftDataset};
use crate::error::{Result, UpliftError};
use crate::model::{Aggregation, BoosterKind, BoosterModel, EnsembleMode, BoosterConfig};
use crate::rng::{stream_rng, Stream};
use crate::trees::{grow_tree, ArmStats, GrowthConfig, RowStat, SplitCriterion, UpliftTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TddpConfig {
    pub num_trees: usize,
    pub shrinkage: f64,
    pub growth: GrowthConfig,
    pub ensemble_mode: EnsembleMode,
    pub max_bins: usize,
    pub seed: u64,
}

impl Default for TddpConfig {
    fn default() -> Self {
        TddpConfig {
            num_trees: 100,
            shrinkage: 0.1,
            growth: GrowthConfig::default(),
            ensemble_mode: EnsembleMode::Boosting,
            max_bins: 255,
            seed: 0,
        }
    }
}

impl TddpConfig {
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

/// Treated/control counts and label sums of a node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TddpNodeStats {
    pub n_treated: u64,
    pub n_control: u64,
    pub sum_treated: f64,
    pub sum_control: f64,
}

impl TddpNodeStats {
    pub fn from_labels(y: &[f64], w: &[usize]) -> Self {
        let mut s = TddpNodeStats::default();
        for (&yi, &wi) in y.iter().zip(w) {
            if wi == 0 {
                s.n_control += 1;
                s.sum_control += yi;
            } else {
                s.n_treated += 1;
                s.sum_treated += yi;
            }
        }
        s
    }

    pub fn from_arms(arms: &[ArmStats]) -> Self {
        TddpNodeStats {
            n_treated: arms[1].count,
            n_control: arms[0].count,
            sum_treated: arms[1].sum_g,
            sum_control: arms[0].sum_g,
        }
    }

    pub fn n(&self) -> u64 {
        self.n_treated + self.n_control
    }

    /// Treated mean minus control mean, each shrunk by `lambda` pseudo-rows.
    pub fn uplift(&self, lambda: f64) -> f64 {
        self.sum_treated / (self.n_treated as f64 + lambda) - self.sum_control / (self.n_control as f64 + lambda)
    }
}

/// `(n_L n_R / n) * (uplift_L - uplift_R)^2`.
pub fn ddp_gain(left: &TddpNodeStats, right: &TddpNodeStats, lambda: f64) -> f64 {
    let (nl, nr) = (left.n() as f64, right.n() as f64);
    let diff = left.uplift(lambda) - right.uplift(lambda);
    nl * nr / (nl + nr) * diff * diff
}

pub fn tddp_leaf_weight(stats: &TddpNodeStats, shrinkage: f64, lambda: f64) -> f64 {
    shrinkage * stats.uplift(lambda)
}

struct DdpCriterion {
    shrinkage: f64,
    lambda: f64,
}

impl SplitCriterion for DdpCriterion {
    fn gain(&self, _parent_score: f64, left: &[ArmStats], right: &[ArmStats]) -> f64 {
        ddp_gain(&TddpNodeStats::from_arms(left), &TddpNodeStats::from_arms(right), self.lambda)
    }

    fn leaf_value(&self, stats: &[ArmStats]) -> Result<Vec<f64>> {
        let s = TddpNodeStats::from_arms(stats);
        if s.n_treated == 0 || s.n_control == 0 {
            return Err(UpliftError::DegenerateLeaf(format!(
                "leaf has {} treated and {} control rows",
                s.n_treated, s.n_control
            )));
        }
        Ok(vec![tddp_leaf_weight(&s, self.shrinkage, self.lambda)])
    }
}

/// Subtracts `tree`'s output from the working labels of treated rows.
pub fn transform_labels(working_y: &mut [f64], tree: &UpliftTree, features: &Matrix, treatment: &[usize]) {
    for (i, y) in working_y.iter_mut().enumerate() {
        if treatment[i] != 0 {
            *y -= tree.leaf_values(tree.predict_leaf(features.row(i)))[0];
        }
    }
}

/// Per-round progress reported by [`fit_tddp_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TddpRound {
    pub round: usize,
    pub num_leaves: usize,
    /// Variance of the working labels after the round.
    pub label_variance: f64,
}

fn variance(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
}

/// Resamples every arm with replacement to its own size.
pub(crate) fn stratified_bootstrap(treatment: &[usize], num_arms: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut by_arm = vec![Vec::new(); num_arms + 1];
    for (i, &w) in treatment.iter().enumerate() {
        by_arm[w].push(i);
    }
    let mut rng = stream_rng(seed, Stream::Bootstrap, index);
    let mut rows = Vec::with_capacity(treatment.len());
    for members in &by_arm {
        for _ in 0..members.len() {
            rows.push(members[rng.random_range(0..members.len())]);
        }
    }
    rows.sort_unstable();
    rows
}

pub fn fit_tddp(data: &UpliftDataset, cfg: &TddpConfig) -> Result<BoosterModel> {
    fit_tddp_with(data, cfg, |_| {})
}

pub fn fit_tddp_with(
    data: &UpliftDataset,
    cfg: &TddpConfig,
    mut on_round: impl FnMut(TddpRound),
) -> Result<BoosterModel> {
    cfg.validate()?;
    if data.num_arms() != 1 {
        return Err(UpliftError::Unsupported(format!(
            "tddp supports binary treatment, data has {} treatment arms",
            data.num_arms()
        )));
    }
    let binned = bin_features(data, cfg.max_bins)?;
    let trees = match cfg.ensemble_mode {
        EnsembleMode::Boosting => boost(data, &binned, cfg, &mut on_round)?,
        EnsembleMode::Bagging => bag(data, &binned, cfg, &mut on_round)?,
    };
    Ok(BoosterModel {
        kind: BoosterKind::Tddp,
        loss: None,
        num_arms: 1,
        shrinkage: cfg.shrinkage,
        aggregation: Aggregation::from(cfg.ensemble_mode),
        feature_names: data.feature_names().to_vec(),
        trees,
        config: BoosterConfig::Tddp(cfg.clone()),
        seed: cfg.seed,
    })
}

fn boost(
    data: &UpliftDataset,
    binned: &BinnedDataset,
    cfg: &TddpConfig,
    on_round: &mut impl FnMut(TddpRound),
) -> Result<Vec<UpliftTree>> {
    let criterion = DdpCriterion { shrinkage: cfg.shrinkage, lambda: cfg.growth.lambda };
    let treatment = data.treatment();
    let mut working_y = data.outcome().to_vec();
    let mut trees = Vec::with_capacity(cfg.num_trees);
    for round in 0..cfg.num_trees {
        let stats: Vec<RowStat> = working_y
            .iter()
            .zip(treatment)
            .map(|(&g, &arm)| RowStat { arm, g, h: 1.0 })
            .collect();
        let grown = grow_tree(binned, (0..data.len()).collect(), &stats, 1, &criterion, &cfg.growth)?;
        transform_labels(&mut working_y, &grown.tree, data.features(), treatment);
        on_round(TddpRound {
            round,
            num_leaves: grown.tree.num_leaves(),
            label_variance: variance(&working_y),
        });
        trees.push(grown.tree);
    }
    Ok(trees)
}

fn bag(
    data: &UpliftDataset,
    binned: &BinnedDataset,
    cfg: &TddpConfig,
    on_round: &mut impl FnMut(TddpRound),
) -> Result<Vec<UpliftTree>> {
    let criterion = DdpCriterion { shrinkage: 1.0, lambda: cfg.growth.lambda };
    let stats: Vec<RowStat> = data
        .outcome()
        .iter()
        .zip(data.treatment())
        .map(|(&g, &arm)| RowStat { arm, g, h: 1.0 })
        .collect();
    let label_variance = variance(data.outcome());
    let mut trees = Vec::with_capacity(cfg.num_trees);
    for round in 0..cfg.num_trees {
        let rows = stratified_bootstrap(data.treatment(), 1, cfg.seed, round as u64);
        let grown = grow_tree(binned, rows, &stats, 1, &criterion, &cfg.growth)?;
        on_round(TddpRound { round, num_leaves: grown.tree.num_leaves(), label_variance });
        trees.push(grown.tree);
    }
    Ok(trees)
}

/// Predicted effect per row.
pub fn predict_tddp(model: &BoosterModel, rows: &Matrix) -> Result<Vec<f64>> {
    if model.kind != BoosterKind::Tddp {
        return Err(UpliftError::Unsupported("predict_tddp needs a tddp model".into()));
    }
    Ok(model.aggregate_leaf_values(rows)?.into_iter().map(|v| v[0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize, OutcomeKind, SyntheticSpec};
    use proptest::prelude::*;
    use rand::Rng;

    fn stats(treated: &[f64], control: &[f64]) -> TddpNodeStats {
        TddpNodeStats {
            n_treated: treated.len() as u64,
            n_control: control.len() as u64,
            sum_treated: treated.iter().sum(),
            sum_control: control.iter().sum(),
        }
    }

    #[test]
    fn gain_hand_example() {
        // (2 * 2 / 4) * ((1 - 0) - (0 - 0))^2 = 1
        let g = ddp_gain(&stats(&[1.0], &[0.0]), &stats(&[0.0], &[0.0]), 0.0);
        assert_eq!(g, 1.0);
    }

    #[test]
    fn gain_zero_for_equal_uplift_and_scales_quadratically() {
        let l = stats(&[1.0, 2.0], &[0.5]);
        let r = stats(&[3.0, 0.0, 1.5], &[1.0, 0.0]);
        assert_eq!(ddp_gain(&l, &l, 0.0), 0.0);
        let c = 3.0;
        let scale = |s: &TddpNodeStats| TddpNodeStats { sum_treated: c * s.sum_treated, sum_control: c * s.sum_control, ..*s };
        let g = ddp_gain(&l, &r, 0.0);
        assert!((ddp_gain(&scale(&l), &scale(&r), 0.0) - c * c * g).abs() <= 1e-12 * g);
    }

    #[test]
    fn leaf_weight_examples() {
        // treated mean 0.6, control mean 0.2, alpha 0.5
        let s = stats(&[1.0, 1.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((tddp_leaf_weight(&s, 0.5, 0.0) - 0.2).abs() < 1e-15);
        assert_eq!(tddp_leaf_weight(&stats(&[1.0, 0.0], &[0.5]), 0.7, 0.0), 0.0);
    }

    /// Within-node sum of squared deviations.
    fn sse(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum()
    }

    fn weighted_gap(l: &[f64], r: &[f64]) -> f64 {
        let (nl, nr) = (l.len() as f64, r.len() as f64);
        let d = l.iter().sum::<f64>() / nl - r.iter().sum::<f64>() / nr;
        nl * nr / (nl + nr) * d * d
    }

    proptest! {
        #[test]
        fn split_sse_decomposition(tau in prop::collection::vec(-5.0f64..5.0, 2..40), cut in 1usize..39) {
            let cut = cut.min(tau.len() - 1);
            let (l, r) = tau.split_at(cut);
            let lhs = weighted_gap(l, r) + sse(l) + sse(r);
            let total = sse(&tau);
            prop_assert!((lhs - total).abs() <= 1e-9 * total.max(1e-12));
        }

        #[test]
        fn transform_leaves_control_rows_alone(
            y in prop::collection::vec(-2.0f64..2.0, 4..30),
            delta in -1.0f64..1.0,
        ) {
            let n = y.len();
            let w: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let x = Matrix::zeros(n, 1);
            let tree = UpliftTree::single_leaf(vec![delta]);
            let mut z = y.clone();
            transform_labels(&mut z, &tree, &x, &w);
            for i in 0..n {
                let expect = if w[i] == 0 { y[i] } else { y[i] - delta };
                prop_assert_eq!(z[i], expect);
            }
        }
    }

    #[test]
    fn sse_argmin_equals_gap_argmax_on_small_sets() {
        let mut rng = stream_rng(1, Stream::Synthesize, 77);
        for _ in 0..200 {
            let n = rng.random_range(3..=30);
            let tau: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let cuts = 1..n;
            let sses: Vec<f64> = cuts.clone().map(|c| sse(&tau[..c]) + sse(&tau[c..])).collect();
            let gaps: Vec<f64> = cuts.map(|c| weighted_gap(&tau[..c], &tau[c..])).collect();
            let argmin = (0..sses.len()).min_by(|&a, &b| sses[a].total_cmp(&sses[b])).unwrap();
            let argmax = (0..gaps.len()).max_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
            assert_eq!(argmin, argmax);
        }
    }

    #[test]
    fn gain_matches_plug_in_criterion_from_raw_rows() {
        let mut rng = stream_rng(2, Stream::Synthesize, 5);
        for _ in 0..100 {
            let n = 40;
            let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect();
            let w: Vec<usize> = (0..n).map(|i| usize::from(i % 3 != 0)).collect();
            let cut = rng.random_range(8..32);
            let mean = |rows: std::ops::Range<usize>, arm: usize| {
                let v: Vec<f64> = rows.filter(|&i| w[i] == arm).map(|i| y[i]).collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            let (nl, nr) = (cut as f64, (n - cut) as f64);
            let d = (mean(0..cut, 1) - mean(0..cut, 0)) - (mean(cut..n, 1) - mean(cut..n, 0));
            let oracle = nl * nr / n as f64 * d * d;
            let l = TddpNodeStats::from_labels(&y[..cut], &w[..cut]);
            let r = TddpNodeStats::from_labels(&y[cut..], &w[cut..]);
            assert!((ddp_gain(&l, &r, 0.0) - oracle).abs() <= 1e-12 * oracle.max(1e-300));
        }
    }

    fn small_data(n: usize, seed: u64) -> UpliftDataset {
        synthesize(&SyntheticSpec {
            n,
            p: 6,
            treatment_ratio: 0.5,
            effect_strength: 0.48,
            noise_sd: 0.0,
            outcome_kind: OutcomeKind::Binary,
            seed,
        })
        .unwrap()
    }

    fn stump_cfg(num_trees: usize, leaves: usize) -> TddpConfig {
        TddpConfig {
            num_trees,
            shrinkage: 1.0,
            growth: GrowthConfig { max_leaves: leaves, ..Default::default() },
            ..Default::default()
        }
    }

    fn ate(d: &UpliftDataset) -> f64 {
        TddpNodeStats::from_labels(d.outcome(), d.treatment()).uplift(0.0)
    }

    #[test]
    fn single_leaf_model_predicts_ate() {
        let d = small_data(2000, 4);
        let m = fit_tddp(&d, &stump_cfg(1, 1)).unwrap();
        let pred = predict_tddp(&m, d.features()).unwrap();
        assert!(pred.iter().all(|&p| (p - ate(&d)).abs() < 1e-12));
    }

    #[test]
    fn second_stump_has_zero_weight() {
        let d = small_data(1000, 8);
        let m = fit_tddp(&d, &stump_cfg(2, 1)).unwrap();
        assert!((m.trees[0].leaf_values(0)[0] - ate(&d)).abs() < 1e-12);
        assert!(m.trees[1].leaf_values(0)[0].abs() < 1e-12);
    }

    #[test]
    fn working_labels_equal_outcome_minus_cumulative_prediction() {
        let d = small_data(1500, 12);
        let cfg = TddpConfig { num_trees: 6, shrinkage: 0.3, growth: GrowthConfig { max_leaves: 5, ..Default::default() }, ..Default::default() };
        let m = fit_tddp(&d, &cfg).unwrap();
        // replay incremental transforms, then compare with y - u_M(x)
        let mut z = d.outcome().to_vec();
        for t in &m.trees {
            transform_labels(&mut z, t, d.features(), d.treatment());
        }
        let u = predict_tddp(&m, d.features()).unwrap();
        for i in 0..d.len() {
            let expect = if d.treatment()[i] == 1 { d.outcome()[i] - u[i] } else { d.outcome()[i] };
            assert!((z[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_yields_zero_trees() {
        // every leaf of the first tree is fully fitted with alpha = 1, so the
        // residual uplift is zero in each leaf of any later tree
        let d = small_data(1200, 3);
        let m = fit_tddp(&d, &stump_cfg(3, 1)).unwrap();
        for t in &m.trees[1..] {
            for v in t.all_leaf_values() {
                assert!(v[0].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn row_order_does_not_change_the_model() {
        let d = small_data(800, 21);
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.reverse();
        order.rotate_left(123);
        let shuffled = d.subset(&order).unwrap();
        let cfg = TddpConfig { num_trees: 5, shrinkage: 0.5, growth: GrowthConfig { max_leaves: 6, ..Default::default() }, ..Default::default() };
        let a = fit_tddp(&d, &cfg).unwrap();
        let b = fit_tddp(&shuffled, &cfg).unwrap();
        assert_eq!(a.trees.len(), b.trees.len());
        for (ta, tb) in a.trees.iter().zip(&b.trees) {
            assert_eq!(ta.nodes(), tb.nodes());
            for (va, vb) in ta.all_leaf_values().iter().zip(tb.all_leaf_values()) {
                assert!((va[0] - vb[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bagging_averages_unshrunk_trees() {
        let d = small_data(1000, 6);
        let cfg = TddpConfig { num_trees: 4, shrinkage: 0.1, ensemble_mode: EnsembleMode::Bagging, growth: GrowthConfig { max_leaves: 1, ..Default::default() }, ..Default::default() };
        let m = fit_tddp(&d, &cfg).unwrap();
        assert_eq!(m.aggregation, Aggregation::Mean);
        let mean: f64 = m.trees.iter().map(|t| t.leaf_values(0)[0]).sum::<f64>() / 4.0;
        let pred = predict_tddp(&m, d.features()).unwrap();
        assert!((pred[0] - mean).abs() < 1e-15);
        // bootstrap effects scatter around the full-sample effect, unshrunk
        assert!((mean - ate(&d)).abs() < 0.1);
    }

    #[test]
    fn multi_arm_and_shape_errors() {
        let x = Matrix::zeros(6, 1);
        let d = UpliftDataset::new(x, vec![0.0; 6], vec![0, 1, 2, 0, 1, 2], vec!["x".into()]).unwrap();
        let err = fit_tddp(&d, &TddpConfig::default()).unwrap_err();
        assert!(err.to_string().contains("tddp supports binary treatment"));
        assert!(err.is_usage_error());

        let d = small_data(300, 1);
        let m = fit_tddp(&d, &stump_cfg(1, 1)).unwrap();
        assert!(matches!(predict_tddp(&m, &Matrix::zeros(2, 3)), Err(UpliftError::Shape { .. })));
        let empty = BoosterModel { trees: vec![], ..m };
        assert!(predict_tddp(&empty, d.features()).is_err());
    }
}
