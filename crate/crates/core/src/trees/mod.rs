//! Tree structure, histogram accumulation and leaf-wise growth shared by both
//! boosters.

mod grow;
mod histogram;

use serde::{Deserialize, Serialize};

use crate::error::{Result, UpliftError};

pub use grow::{grow_tree, GrownTree, SplitCriterion};
pub use histogram::{build_histograms, sum_stats, ArmStats, HistogramSet, RowStat};

/// A row goes left when its value is `<= threshold`; missing values follow
/// `nan_goes_left`. `threshold_bin` is the same cut in bin space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature: usize,
    pub threshold_bin: u16,
    pub threshold: f64,
    pub nan_goes_left: bool,
}

impl SplitRule {
    pub fn goes_left(&self, value: f64) -> bool {
        if value.is_nan() {
            self.nan_goes_left
        } else {
            value <= self.threshold
        }
    }

    pub(crate) fn bin_goes_left(&self, bin: u16) -> bool {
        if bin == crate::dataset::NAN_BIN {
            self.nan_goes_left
        } else {
            bin <= self.threshold_bin
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        #[serde(flatten)]
        rule: SplitRule,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: usize,
    },
}

/// Binary tree stored as a node array rooted at index 0.
///
/// Each leaf holds a value vector: one entry (the effect) for TDDP trees,
/// `[v, u_1, .., u_K]` for CausalGBM trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeParts")]
pub struct UpliftTree {
    nodes: Vec<Node>,
    leaf_values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeParts {
    nodes: Vec<Node>,
    leaf_values: Vec<Vec<f64>>,
}

impl TryFrom<TreeParts> for UpliftTree {
    type Error = UpliftError;

    fn try_from(parts: TreeParts) -> Result<Self> {
        UpliftTree::from_parts(parts.nodes, parts.leaf_values)
    }
}

impl UpliftTree {
    pub fn single_leaf(values: Vec<f64>) -> Self {
        UpliftTree {
            nodes: vec![Node::Leaf { leaf: 0 }],
            leaf_values: vec![values],
        }
    }

    /// Checks that `nodes` forms a binary tree whose leaves are numbered
    /// `0..leaf_values.len()` exactly once.
    pub fn from_parts(nodes: Vec<Node>, leaf_values: Vec<Vec<f64>>) -> Result<Self> {
        let tree = UpliftTree { nodes, leaf_values };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(UpliftError::ModelFormat(m));
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        let mut visited = vec![false; self.nodes.len()];
        let mut leaf_seen = vec![false; self.leaf_values.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() || visited[i] {
                return bad(format!("node {i} is out of range or reachable twice"));
            }
            visited[i] = true;
            match &self.nodes[i] {
                Node::Split { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
                Node::Leaf { leaf } => match leaf_seen.get_mut(*leaf) {
                    Some(seen) if !*seen => *seen = true,
                    _ => return bad(format!("leaf index {leaf} is out of range or repeated")),
                },
            }
        }
        if visited.iter().any(|v| !v) || leaf_seen.iter().any(|v| !v) {
            return bad("tree has unreachable nodes or unused leaves".into());
        }
        let width = self.leaf_values[0].len();
        if self.leaf_values.iter().any(|v| v.len() != width) {
            return bad("leaf value vectors differ in length".into());
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_values.len()
    }

    pub fn leaf_values(&self, leaf: usize) -> &[f64] {
        &self.leaf_values[leaf]
    }

    pub fn all_leaf_values(&self) -> &[Vec<f64>] {
        &self.leaf_values
    }

    /// Largest feature index used by any split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { rule, .. } => Some(rule.feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Routes a raw feature row to its leaf index.
    pub fn predict_leaf(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { rule, left, right } => {
                    i = if rule.goes_left(row[rule.feature]) { *left } else { *right };
                }
                Node::Leaf { leaf } => return *leaf,
            }
        }
    }
}

/// Stopping rules for leaf-wise growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub max_leaves: usize,
    /// `None` means unlimited depth.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_per_arm_leaf: usize,
    pub min_gain: f64,
    /// L2 penalty added to every hessian-sum denominator.
    pub lambda: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            max_leaves: 31,
            max_depth: None,
            min_samples_leaf: 20,
            min_samples_per_arm_leaf: 5,
            min_gain: 0.0,
            lambda: 0.0,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_leaves < 1 {
            return Err(UpliftError::config("max_leaves", "must be at least 1"));
        }
        if self.max_depth == Some(0) {
            return Err(UpliftError::config("max_depth", "must be at least 1"));
        }
        if self.min_samples_leaf < 1 {
            return Err(UpliftError::config("min_samples_leaf", "must be at least 1"));
        }
        if self.min_samples_per_arm_leaf < 1 {
            return Err(UpliftError::config("min_samples_per_arm", "must be at least 1"));
        }
        if !(self.min_gain >= 0.0 && self.min_gain.is_finite()) {
            return Err(UpliftError::config("min_gain", "must be a finite value >= 0"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(UpliftError::config("lambda", "must be a finite value >= 0"));
        }
        Ok(())
    }
}
