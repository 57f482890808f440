//! Uplift datasets: `(x_i, y_i, w_i)` triples plus optional ground truth.

mod binning;
mod csv_io;
mod folds;
mod synth;

use std::fmt;

use crate::error::{Result, UpliftError};

pub use binning::{bin_features, bin_value, BinnedDataset, NAN_BIN};
pub use csv_io::{load_csv, load_features, write_csv, TRUE_EFFECT_PREFIX};
pub use folds::{split_folds, Fold};
pub use synth::{baseline_outcome, effect_shape, synthesize, OutcomeKind, SyntheticSpec};

/// Dense row-major matrix of `f64`. Missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(UpliftError::Shape {
                what: "matrix cells",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(UpliftError::Shape {
                    what: "columns",
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.cols.max(1)).copied()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Features, outcomes and treatment arms of an uplift problem.
///
/// Arms are `0..=K` with `0` the control group and `K >= 1`; every arm has at
/// least one row. `true_effect`, when present, holds the ground-truth effect
/// of arm `a` (column `a - 1`) for synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct UpliftDataset {
    features: Matrix,
    outcome: Vec<f64>,
    treatment: Vec<usize>,
    true_effect: Option<Matrix>,
    feature_names: Vec<String>,
    num_arms: usize,
}

impl UpliftDataset {
    pub fn new(
        features: Matrix,
        outcome: Vec<f64>,
        treatment: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = features.nrows();
        if outcome.len() != n {
            return Err(UpliftError::Shape {
                what: "outcome values",
                expected: n,
                found: outcome.len(),
            });
        }
        if treatment.len() != n {
            return Err(UpliftError::Shape {
                what: "treatment values",
                expected: n,
                found: treatment.len(),
            });
        }
        if feature_names.len() != features.ncols() {
            return Err(UpliftError::Shape {
                what: "feature names",
                expected: features.ncols(),
                found: feature_names.len(),
            });
        }
        if let Some(i) = outcome.iter().position(|y| !y.is_finite()) {
            return Err(UpliftError::Validation(format!(
                "outcome at row {i} is not a finite number"
            )));
        }
        if let Some(pos) = features.as_slice().iter().position(|x| x.is_infinite()) {
            return Err(UpliftError::Validation(format!(
                "feature `{}` at row {} is infinite",
                feature_names[pos % features.ncols()],
                pos / features.ncols()
            )));
        }
        let num_arms = validate_arms(&treatment)?;
        Ok(UpliftDataset {
            features,
            outcome,
            treatment,
            true_effect: None,
            feature_names,
            num_arms,
        })
    }

    /// Attaches per-arm ground-truth effects (`n x K`).
    pub fn with_true_effect(mut self, effect: Matrix) -> Result<Self> {
        if effect.nrows() != self.len() || effect.ncols() != self.num_arms {
            return Err(UpliftError::Shape {
                what: "true-effect cells",
                expected: self.len() * self.num_arms,
                found: effect.nrows() * effect.ncols(),
            });
        }
        self.true_effect = Some(effect);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    /// Number of treatment arms `K`, excluding control.
    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn treatment(&self) -> &[usize] {
        &self.treatment
    }

    pub fn true_effect(&self) -> Option<&Matrix> {
        self.true_effect.as_ref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Outcomes are all exactly 0 or 1.
    pub fn is_binary_outcome(&self) -> bool {
        self.outcome.iter().all(|&y| y == 0.0 || y == 1.0)
    }

    /// Row subset in the given order. Fails if the subset loses an arm.
    pub fn subset(&self, rows: &[usize]) -> Result<UpliftDataset> {
        let mut out = UpliftDataset::new(
            self.features.select_rows(rows),
            rows.iter().map(|&i| self.outcome[i]).collect(),
            rows.iter().map(|&i| self.treatment[i]).collect(),
            self.feature_names.clone(),
        )?;
        if out.num_arms != self.num_arms {
            return Err(UpliftError::Validation(format!(
                "row subset has {} treatment arms, parent has {}",
                out.num_arms, self.num_arms
            )));
        }
        out.true_effect = self.true_effect.as_ref().map(|m| m.select_rows(rows));
        Ok(out)
    }

    pub fn arm_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_arms + 1];
        for &w in &self.treatment {
            counts[w] += 1;
        }
        counts
    }
}

fn validate_arms(treatment: &[usize]) -> Result<usize> {
    let max_arm = treatment.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max_arm + 1];
    for &w in treatment {
        counts[w] += 1;
    }
    if counts[0] == 0 {
        return Err(UpliftError::Validation("no control rows".into()));
    }
    if max_arm == 0 {
        return Err(UpliftError::Validation("no treated rows".into()));
    }
    if let Some(arm) = counts.iter().position(|&c| c == 0) {
        return Err(UpliftError::Validation(format!(
            "treatment arm {arm} has no rows (arms must be contiguous 0..={max_arm})"
        )));
    }
    Ok(max_arm)
}

/// Headline statistics of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub size: usize,
    pub features: usize,
    pub avg_label: f64,
    /// Fraction of rows with `w > 0`.
    pub treatment_ratio: f64,
    /// `100 * (mean_treated - mean_control) / mean_control`; `None` when the
    /// control mean is zero.
    pub relative_uplift: Option<f64>,
}

pub fn summarize(data: &UpliftDataset) -> DatasetSummary {
    let n = data.len();
    let (mut sum_t, mut n_t, mut sum_c, mut n_c) = (0.0, 0usize, 0.0, 0usize);
    for (&y, &w) in data.outcome.iter().zip(&data.treatment) {
        if w > 0 {
            sum_t += y;
            n_t += 1;
        } else {
            sum_c += y;
            n_c += 1;
        }
    }
    let mean_c = sum_c / n_c as f64;
    let mean_t = sum_t / n_t as f64;
    let relative_uplift = (mean_c != 0.0).then(|| 100.0 * (mean_t - mean_c) / mean_c);
    DatasetSummary {
        size: n,
        features: data.num_features(),
        avg_label: (sum_t + sum_c) / n as f64,
        treatment_ratio: n_t as f64 / n as f64,
        relative_uplift,
    }
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22}{}", "Size", self.size)?;
        writeln!(f, "{:<22}{}", "Features", self.features)?;
        writeln!(f, "{:<22}{:.3}", "Avg. Label", self.avg_label)?;
        writeln!(f, "{:<22}{:.2}", "Treatment Ratio", self.treatment_ratio)?;
        match self.relative_uplift {
            Some(r) => write!(f, "{:<22}{:.1}", "Relative Uplift (%)", r),
            None => write!(f, "{:<22}undefined", "Relative Uplift (%)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(y: Vec<f64>, w: Vec<usize>) -> Result<UpliftDataset> {
        let n = y.len();
        let x = Matrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        UpliftDataset::new(x, y, w, vec!["f1".into()])
    }

    #[test]
    fn rejects_missing_control_and_gaps() {
        let err = tiny(vec![0.0, 1.0], vec![1, 1]).unwrap_err();
        assert!(err.to_string().contains("no control rows"));
        let err = tiny(vec![0.0, 1.0], vec![0, 0]).unwrap_err();
        assert!(err.to_string().contains("no treated rows"));
        let err = tiny(vec![0.0, 1.0, 1.0], vec![0, 2, 2]).unwrap_err();
        assert!(err.to_string().contains("arm 1 has no rows"));
    }

    #[test]
    fn rejects_length_mismatch() {
        let x = Matrix::zeros(3, 1);
        let err = UpliftDataset::new(x, vec![0.0; 2], vec![0, 1, 1], vec!["a".into()]);
        assert!(matches!(err, Err(UpliftError::Shape { .. })));
    }

    #[test]
    fn summary_of_balanced_toy() {
        // control y = [0, 1], treated y = [0, 1]: equal means, zero uplift
        let s = summarize(&tiny(vec![0.0, 1.0, 0.0, 1.0], vec![0, 0, 1, 1]).unwrap());
        assert_eq!(s.size, 4);
        assert_eq!(s.avg_label, 0.5);
        assert_eq!(s.treatment_ratio, 0.5);
        assert_eq!(s.relative_uplift, Some(0.0));

        let s = summarize(&tiny(vec![0.0, 1.0, 1.0, 1.0], vec![0, 0, 1, 1]).unwrap());
        assert_eq!(s.relative_uplift, Some(100.0));
    }

    #[test]
    fn summary_undefined_uplift_on_zero_control_mean() {
        let s = summarize(&tiny(vec![0.0; 4], vec![0, 0, 1, 1]).unwrap());
        assert_eq!(s.relative_uplift, None);
        assert!(s.to_string().contains("undefined"));
    }

    #[test]
    fn subset_keeps_truth_and_checks_arms() {
        let d = tiny(vec![0.0, 1.0, 0.0, 1.0], vec![0, 1, 0, 1])
            .unwrap()
            .with_true_effect(Matrix::new(4, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap())
            .unwrap();
        let s = d.subset(&[3, 0]).unwrap();
        assert_eq!(s.outcome(), &[1.0, 0.0]);
        assert_eq!(s.true_effect().unwrap().as_slice(), &[0.4, 0.1]);
        assert!(d.subset(&[0, 2]).is_err());
    }
}
