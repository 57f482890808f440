use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::dataset::{split_folds, synthesize, SyntheticSpec, UpliftDataset};
use crate::error::Result;
use crate::eval::cv::uplift_scores;
use crate::eval::qini::qini_score;
use crate::model::{BoosterConfig, BoosterKind, EnsembleMode};

/// One trained configuration in the boosting-versus-bagging comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub method: BoosterKind,
    pub mode: EnsembleMode,
    pub num_features: usize,
    pub train_qini: f64,
    pub test_qini: f64,
}

fn qini_on(config: &BoosterConfig, train: &UpliftDataset, test: &UpliftDataset) -> Result<(f64, f64)> {
    let model = config.fit(train)?;
    let score = |d: &UpliftDataset| qini_score(&uplift_scores(&model, d.features())?, d.outcome(), d.treatment());
    Ok((score(train)?, score(test)?))
}

/// Trains every config in both ensemble modes on a stratified 50/50 split of
/// each synthetic dataset and reports train and test Qini coefficients.
///
/// Rows come out grouped by dataset, then config, with boosting before
/// bagging.
pub fn ablate_ensembles(specs: &[SyntheticSpec], configs: &[BoosterConfig]) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for spec in specs {
        let data = synthesize(spec)?;
        let split = split_folds(&data, 2, spec.seed)?.swap_remove(0);
        let (train, test) = (data.subset(&split.train)?, data.subset(&split.test)?);
        for config in configs {
            for mode in [EnsembleMode::Boosting, EnsembleMode::Bagging] {
                let (train_qini, test_qini) = qini_on(&config.with_mode(mode), &train, &test)?;
                rows.push(AblationRow {
                    method: config.kind(),
                    mode,
                    num_features: spec.p,
                    train_qini,
                    test_qini,
                });
            }
        }
    }
    Ok(rows)
}

fn method_name(kind: BoosterKind) -> &'static str {
    match kind {
        BoosterKind::Tddp => "tddp",
        BoosterKind::Causalgbm => "causalgbm",
    }
}

fn mode_name(mode: EnsembleMode) -> &'static str {
    match mode {
        EnsembleMode::Boosting => "boosting",
        EnsembleMode::Bagging => "bagging",
    }
}

pub fn write_ablation_csv(rows: &[AblationRow], out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["method", "mode", "num_features", "train_qini", "test_qini"])?;
    for r in rows {
        writer.write_record([
            method_name(r.method).to_string(),
            mode_name(r.mode).to_string(),
            r.num_features.to_string(),
            r.train_qini.to_string(),
            r.test_qini.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn format_ablation_table(rows: &[AblationRow]) -> String {
    let mut s = format!("{:<10} {:<9} {:>8} {:>11} {:>11}\n", "method", "mode", "features", "train_qini", "test_qini");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<10} {:<9} {:>8} {:>11.4} {:>11.4}",
            method_name(r.method),
            mode_name(r.mode),
            r.num_features,
            r.train_qini,
            r.test_qini
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causalgbm::CausalConfig;
    use crate::dataset::OutcomeKind;
    use crate::tddp::TddpConfig;
    use crate::trees::GrowthConfig;

    fn spec(p: usize) -> SyntheticSpec {
        SyntheticSpec {
            n: 1200,
            p,
            treatment_ratio: 0.5,
            effect_strength: 0.48,
            noise_sd: 0.0,
            outcome_kind: OutcomeKind::Binary,
            seed: 2,
        }
    }

    fn configs() -> Vec<BoosterConfig> {
        let growth = GrowthConfig { max_leaves: 4, ..Default::default() };
        vec![
            BoosterConfig::Tddp(TddpConfig { num_trees: 5, growth: growth.clone(), ..Default::default() }),
            BoosterConfig::Causalgbm(CausalConfig { num_trees: 5, growth, ..Default::default() }),
        ]
    }

    #[test]
    fn table_layout_and_determinism() {
        let rows = ablate_ensembles(&[spec(3), spec(6)], &configs()).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(
            rows.iter().map(|r| (r.method, r.mode, r.num_features)).take(4).collect::<Vec<_>>(),
            vec![
                (BoosterKind::Tddp, EnsembleMode::Boosting, 3),
                (BoosterKind::Tddp, EnsembleMode::Bagging, 3),
                (BoosterKind::Causalgbm, EnsembleMode::Boosting, 3),
                (BoosterKind::Causalgbm, EnsembleMode::Bagging, 3),
            ]
        );
        assert_eq!(rows, ablate_ensembles(&[spec(3), spec(6)], &configs()).unwrap());

        let mut csv = Vec::new();
        write_ablation_csv(&rows, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("method,mode,num_features,train_qini,test_qini\ntddp,boosting,3,"));
        let table = format_ablation_table(&rows);
        assert_eq!(table.lines().count(), 9);
        assert!(table.lines().nth(8).unwrap().starts_with("causalgbm  bagging          6"));
    }
}
