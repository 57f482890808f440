use crate::dataset::UpliftDataset;
use crate::error::{Result, UpliftError};

/// Bin reserved for missing values in every feature.
pub const NAN_BIN: u16 = 0;

/// Quantized features for histogram split finding.
///
/// For feature `f`, `boundaries[f]` holds the sorted upper edges of the
/// non-missing bins; the last edge is `+inf`. A value `x` falls in bin
/// `1 + #{edges < x}`, so bin `t` covers `(edge[t-2], edge[t-1]]` and
/// `bin(x) <= t` exactly when `x <= edge[t-1]`.
#[derive(Debug, Clone)]
pub struct BinnedDataset {
    bins: Vec<Vec<u16>>,
    boundaries: Vec<Vec<f64>>,
    max_bins: usize,
    rows: usize,
}

impl BinnedDataset {
    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_features(&self) -> usize {
        self.bins.len()
    }

    pub fn max_bins(&self) -> usize {
        self.max_bins
    }

    pub fn feature_bins(&self, feature: usize) -> &[u16] {
        &self.bins[feature]
    }

    pub fn boundaries(&self, feature: usize) -> &[f64] {
        &self.boundaries[feature]
    }

    /// Bins of `feature`, counting the missing-value bin.
    pub fn num_bins(&self, feature: usize) -> usize {
        self.boundaries[feature].len() + 1
    }

    /// Real-valued threshold equivalent to `bin <= threshold_bin`. The open
    /// top bin maps to `f64::MAX` so the value stays finite in model files.
    pub fn threshold_value(&self, feature: usize, threshold_bin: u16) -> f64 {
        debug_assert!(threshold_bin >= 1);
        let edge = self.boundaries[feature][threshold_bin as usize - 1];
        if edge.is_infinite() {
            f64::MAX
        } else {
            edge
        }
    }
}

pub fn bin_value(edges: &[f64], x: f64) -> u16 {
    if x.is_nan() {
        NAN_BIN
    } else {
        let pos = edges.partition_point(|&e| e < x).min(edges.len().saturating_sub(1));
        (pos + 1) as u16
    }
}

/// Equal-frequency edges over the non-missing values of one feature.
fn feature_edges(mut values: Vec<f64>, max_bins: usize) -> Vec<f64> {
    values.retain(|x| !x.is_nan());
    if values.is_empty() {
        return Vec::new();
    }
    values.sort_by(f64::total_cmp);
    let mut distinct = values.clone();
    distinct.dedup();

    let mut edges = if distinct.len() <= max_bins {
        distinct[..distinct.len() - 1].to_vec()
    } else {
        let n = values.len();
        let max = *values.last().unwrap();
        let mut edges: Vec<f64> = Vec::with_capacity(max_bins);
        for j in 1..max_bins {
            let idx = (j * n).div_ceil(max_bins) - 1;
            let edge = values[idx];
            if edge < max && edges.last().is_none_or(|&last| edge > last) {
                edges.push(edge);
            }
        }
        edges
    };
    edges.push(f64::INFINITY);
    edges
}

pub fn bin_features(data: &UpliftDataset, max_bins: usize) -> Result<BinnedDataset> {
    if !(2..=65535).contains(&max_bins) {
        return Err(UpliftError::config(
            "max_bins",
            format!("must be in [2, 65535], got {max_bins}"),
        ));
    }
    let x = data.features();
    let mut bins = Vec::with_capacity(x.ncols());
    let mut boundaries = Vec::with_capacity(x.ncols());
    for f in 0..x.ncols() {
        let edges = feature_edges(x.column(f).collect(), max_bins);
        bins.push(x.column(f).map(|v| bin_value(&edges, v)).collect());
        boundaries.push(edges);
    }
    Ok(BinnedDataset {
        bins,
        boundaries,
        max_bins,
        rows: data.len(),
    })
}
