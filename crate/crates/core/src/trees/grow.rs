//! Leaf-wise (best-first) tree growth over histograms.

use rayon::prelude::*;

use crate::dataset::{BinnedDataset, NAN_BIN};
use crate::error::Result;
use crate::trees::histogram::{build_histograms, sum_stats, ArmStats, HistogramSet, RowStat};
use crate::trees::{GrowthConfig, Node, SplitRule, UpliftTree};

/// Split scoring and leaf fitting for one booster.
pub trait SplitCriterion: Sync {
    /// Per-node quantity computed once and passed to every [`gain`](Self::gain)
    /// call for that node's candidates.
    fn node_score(&self, stats: &[ArmStats]) -> f64 {
        let _ = stats;
        0.0
    }

    /// Improvement from splitting a node with `node_score` equal to
    /// `parent_score` into `left` and `right`. Only called for candidates that
    /// satisfy the sample-count guards.
    fn gain(&self, parent_score: f64, left: &[ArmStats], right: &[ArmStats]) -> f64;

    /// Leaf value vector for a node with the given per-arm totals.
    fn leaf_value(&self, stats: &[ArmStats]) -> Result<Vec<f64>>;
}

/// A grown tree plus the rows that ended in each of its leaves.
#[derive(Debug, Clone)]
pub struct GrownTree {
    pub tree: UpliftTree,
    pub leaf_rows: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
struct Candidate {
    rule: SplitRule,
    gain: f64,
}

struct Frontier {
    node: usize,
    rows: Vec<usize>,
    hist: HistogramSet,
    totals: Vec<ArmStats>,
    depth: usize,
    best: Option<Candidate>,
}

fn feasible(cfg: &GrowthConfig, stats: &[ArmStats]) -> bool {
    let n: u64 = stats.iter().map(|s| s.count).sum();
    n >= cfg.min_samples_leaf as u64
        && stats
            .iter()
            .all(|s| s.count >= cfg.min_samples_per_arm_leaf as u64)
}

/// Best split of one feature. Candidates are visited in increasing
/// threshold order with `nan_goes_left = false` first, and only a strictly
/// larger gain replaces the incumbent.
fn best_split_for_feature<C: SplitCriterion>(
    data: &BinnedDataset,
    feature: usize,
    hist: &HistogramSet,
    totals: &[ArmStats],
    criterion: &C,
    cfg: &GrowthConfig,
) -> Option<Candidate> {
    let width = hist.width();
    let num_bins = hist.num_bins(feature);
    let nan = hist.bin(feature, NAN_BIN as usize);
    let has_nan = nan.iter().any(|s| s.count > 0);
    let mut cum = vec![ArmStats::default(); width];
    let mut left = vec![ArmStats::default(); width];
    let mut right = vec![ArmStats::default(); width];
    let mut best: Option<(u16, bool, f64)> = None;
    let parent_score = criterion.node_score(totals);

    for t in 1..num_bins {
        let bin = hist.bin(feature, t);
        // an empty bin repeats the previous threshold's partition
        if t > 1 && bin.iter().all(|s| s.count == 0) {
            continue;
        }
        for (c, &b) in cum.iter_mut().zip(bin) {
            *c += b;
        }
        for nan_left in [false, true] {
            if nan_left && !has_nan {
                continue;
            }
            for a in 0..width {
                left[a] = if nan_left { cum[a] + nan[a] } else { cum[a] };
                right[a] = totals[a] - left[a];
            }
            if !feasible(cfg, &left) || !feasible(cfg, &right) {
                continue;
            }
            let gain = criterion.gain(parent_score, &left, &right);
            if gain > cfg.min_gain && best.is_none_or(|(_, _, g)| gain > g) {
                best = Some((t as u16, nan_left, gain));
            }
        }
    }
    best.map(|(threshold_bin, nan_goes_left, gain)| Candidate {
        rule: SplitRule {
            feature,
            threshold_bin,
            threshold: data.threshold_value(feature, threshold_bin),
            nan_goes_left,
        },
        gain,
    })
}

fn find_best_split<C: SplitCriterion>(
    data: &BinnedDataset,
    leaf: &Frontier,
    criterion: &C,
    cfg: &GrowthConfig,
) -> Option<Candidate> {
    if cfg.max_depth.is_some_and(|d| leaf.depth >= d) {
        return None;
    }
    if !feasible(cfg, &leaf.totals) {
        return None;
    }
    let per_feature: Vec<Option<Candidate>> = (0..data.num_features())
        .into_par_iter()
        .map(|f| best_split_for_feature(data, f, &leaf.hist, &leaf.totals, criterion, cfg))
        .collect();
    // reduce in feature order: equal gains keep the lower feature index
    per_feature
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<Candidate>, c| match acc {
            Some(a) if a.gain >= c.gain => Some(a),
            _ => Some(c),
        })
}

/// Grows one tree on `rows` (which may repeat, for bootstrap samples).
///
/// At each step the frontier leaf with the largest best-split gain is split;
/// equal gains go to the leaf created first. Growth stops at `max_leaves` or
/// when no leaf has a feasible split with gain above `min_gain`. A root that
/// violates the per-arm minimum becomes a single leaf.
pub fn grow_tree<C: SplitCriterion>(
    data: &BinnedDataset,
    rows: Vec<usize>,
    stats: &[RowStat],
    num_arms: usize,
    criterion: &C,
    cfg: &GrowthConfig,
) -> Result<GrownTree> {
    let totals = sum_stats(&rows, stats, num_arms);
    let mut nodes = vec![Node::Leaf { leaf: usize::MAX }];
    let root_ok = cfg.max_leaves > 1 && feasible(cfg, &totals);
    let hist = if root_ok {
        build_histograms(&rows, data, stats, num_arms)
    } else {
        build_histograms(&[], data, stats, num_arms)
    };
    let mut root = Frontier {
        node: 0,
        rows,
        hist,
        totals,
        depth: 0,
        best: None,
    };
    if root_ok {
        root.best = find_best_split(data, &root, criterion, cfg);
    }
    // frontier order is creation order, which settles ties across leaves
    let mut frontier = vec![root];

    while frontier.len() < cfg.max_leaves {
        let pick = frontier
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.best.as_ref().map(|c| (i, c.gain)))
            .fold(None, |acc: Option<(usize, f64)>, (i, g)| match acc {
                Some((_, bg)) if bg >= g => acc,
                _ => Some((i, g)),
            });
        let Some((idx, _)) = pick else { break };

        let parent = frontier.remove(idx);
        let rule = parent.best.as_ref().expect("picked leaf has a split").rule;
        let bins = data.feature_bins(rule.feature);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            parent.rows.iter().partition(|&&r| rule.bin_goes_left(bins[r]));

        let (small, large_is_left) = if left_rows.len() <= right_rows.len() {
            (&left_rows, false)
        } else {
            (&right_rows, true)
        };
        let small_hist = build_histograms(small, data, stats, num_arms);
        let large_hist = parent.hist.subtract(&small_hist);
        let (left_hist, right_hist) = if large_is_left {
            (large_hist, small_hist)
        } else {
            (small_hist, large_hist)
        };

        let left_node = nodes.len();
        nodes.push(Node::Leaf { leaf: usize::MAX });
        nodes.push(Node::Leaf { leaf: usize::MAX });
        nodes[parent.node] = Node::Split {
            rule,
            left: left_node,
            right: left_node + 1,
        };

        for (offset, (rows, hist)) in [(left_rows, left_hist), (right_rows, right_hist)]
            .into_iter()
            .enumerate()
        {
            let totals = sum_stats(&rows, stats, num_arms);
            let mut child = Frontier {
                node: left_node + offset,
                rows,
                hist,
                totals,
                depth: parent.depth + 1,
                best: None,
            };
            child.best = find_best_split(data, &child, criterion, cfg);
            frontier.push(child);
        }
    }

    // number leaves in node-array order
    frontier.sort_by_key(|f| f.node);
    let mut leaf_values = Vec::with_capacity(frontier.len());
    let mut leaf_rows = Vec::with_capacity(frontier.len());
    for (leaf, f) in frontier.into_iter().enumerate() {
        nodes[f.node] = Node::Leaf { leaf };
        leaf_values.push(criterion.leaf_value(&f.totals)?);
        leaf_rows.push(f.rows);
    }
    Ok(GrownTree {
        tree: UpliftTree::from_parts(nodes, leaf_values)?,
        leaf_rows,
    })
}
