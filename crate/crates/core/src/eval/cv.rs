use rayon::prelude::*;
use serde::Serialize;

use crate::causalgbm::{fit_causalgbm, predict_effect};
use crate::dataset::{split_folds, Matrix, UpliftDataset};
use crate::error::{Result, UpliftError};
use crate::eval::qini::qini_score;
use crate::model::{BoosterConfig, BoosterKind, BoosterModel, EnsembleMode, Scale};
use crate::tddp::{fit_tddp, predict_tddp};

impl BoosterConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            BoosterConfig::Tddp(cfg) => cfg.validate(),
            BoosterConfig::Causalgbm(cfg) => cfg.validate(),
        }
    }

    pub fn fit(&self, data: &UpliftDataset) -> Result<BoosterModel> {
        match self {
            BoosterConfig::Tddp(cfg) => fit_tddp(data, cfg),
            BoosterConfig::Causalgbm(cfg) => fit_causalgbm(data, cfg),
        }
    }

    pub fn with_mode(&self, mode: EnsembleMode) -> Self {
        let mut out = self.clone();
        match &mut out {
            BoosterConfig::Tddp(cfg) => cfg.ensemble_mode = mode,
            BoosterConfig::Causalgbm(cfg) => cfg.ensemble_mode = mode,
        }
        out
    }

    pub fn kind(&self) -> BoosterKind {
        match self {
            BoosterConfig::Tddp(_) => BoosterKind::Tddp,
            BoosterConfig::Causalgbm(_) => BoosterKind::Causalgbm,
        }
    }
}

/// Ranking score for binary treatment: the predicted effect of arm 1, on the
/// probability scale for logistic models.
pub fn uplift_scores(model: &BoosterModel, rows: &Matrix) -> Result<Vec<f64>> {
    match model.kind {
        BoosterKind::Tddp => predict_tddp(model, rows),
        BoosterKind::Causalgbm => {
            let effect = predict_effect(model, rows, Scale::Probability)?;
            Ok((0..rows.nrows()).map(|i| effect.get(i, 0)).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub fold_coefficients: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of the fold coefficients over `sqrt(k)`.
    pub std_error: f64,
}

impl std::fmt::Display for CvReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, c) in self.fold_coefficients.iter().enumerate() {
            writeln!(f, "fold {i:>2}  qini {c:.6}")?;
        }
        write!(f, "mean qini {:.6} +/- {:.6} (s.e., {} folds)", self.mean, self.std_error, self.fold_coefficients.len())
    }
}

pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn run_fold(data: &UpliftDataset, config: &BoosterConfig, train: &[usize], test: &[usize]) -> Result<f64> {
    let model = config.fit(&data.subset(train)?)?;
    let held_out = data.subset(test)?;
    let scores = uplift_scores(&model, held_out.features())?;
    qini_score(&scores, held_out.outcome(), held_out.treatment())
}

/// Stratified `k`-fold cross-validated Qini coefficient.
///
/// Folds are trained in parallel; results are reported in fold order.
pub fn cross_validate(data: &UpliftDataset, config: &BoosterConfig, k: usize, seed: u64) -> Result<CvReport> {
    if data.num_arms() != 1 {
        return Err(UpliftError::Unsupported(format!(
            "cross-validation scores binary treatment, data has {} treatment arms",
            data.num_arms()
        )));
    }
    let folds = split_folds(data, k, seed)?;
    let fold_coefficients = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            run_fold(data, config, &fold.train, &fold.test)
                .map_err(|e| UpliftError::Fold { fold: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std_error) = mean_and_std_error(&fold_coefficients);
    Ok(CvReport { fold_coefficients, mean, std_error })
}
