use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use uplift_gbm::causalgbm::{fit_causalgbm_with, predict_effect, predict_outcome, CausalConfig};
use uplift_gbm::dataset::{load_csv, load_features, summarize, synthesize, write_csv, SyntheticSpec};
use uplift_gbm::eval::{ablate_ensembles, cross_validate, format_ablation_table, qini_curve, write_ablation_csv, write_curve_csv};
use uplift_gbm::tddp::{fit_tddp_with, predict_tddp};
use uplift_gbm::{
    model_io, BoosterConfig, BoosterKind, EnsembleMode, GrowthConfig, LossKind, OutcomeKind, Scale, TddpConfig,
    UpliftError,
};

use crate::args::*;
use crate::Failure;

fn growth(m: &ModelArgs) -> GrowthConfig {
    GrowthConfig {
        max_leaves: m.max_leaves,
        max_depth: m.max_depth,
        min_samples_leaf: m.min_samples_leaf,
        min_samples_per_arm_leaf: m.min_samples_per_arm,
        min_gain: m.min_gain,
        lambda: m.lambda,
    }
}

fn mode(m: ModeArg) -> EnsembleMode {
    match m {
        ModeArg::Boosting => EnsembleMode::Boosting,
        ModeArg::Bagging => EnsembleMode::Bagging,
    }
}

fn loss(l: Option<LossArg>) -> LossKind {
    match l {
        Some(LossArg::Logistic) => LossKind::Logistic,
        _ => LossKind::Squared,
    }
}

fn tddp_config(m: &ModelArgs) -> TddpConfig {
    TddpConfig {
        num_trees: m.trees,
        shrinkage: m.shrinkage,
        growth: growth(m),
        ensemble_mode: mode(m.mode),
        max_bins: m.max_bins,
        seed: m.seed,
    }
}

fn causal_config(m: &ModelArgs) -> CausalConfig {
    CausalConfig {
        num_trees: m.trees,
        shrinkage: m.shrinkage,
        loss: loss(m.loss),
        growth: growth(m),
        ensemble_mode: mode(m.mode),
        max_bins: m.max_bins,
        seed: m.seed,
    }
}

fn booster_config(booster: BoosterArg, m: &ModelArgs) -> Result<BoosterConfig, Failure> {
    let cfg = match booster {
        BoosterArg::Tddp if m.loss.is_some() => {
            return Err(Failure::Usage("invalid configuration `loss`: only causalgbm takes a loss".into()))
        }
        BoosterArg::Tddp => BoosterConfig::Tddp(tddp_config(m)),
        BoosterArg::Causalgbm => BoosterConfig::Causalgbm(causal_config(m)),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn outcome_kind(k: OutcomeKindArg) -> OutcomeKind {
    match k {
        OutcomeKindArg::Binary => OutcomeKind::Binary,
        OutcomeKindArg::Continuous => OutcomeKind::Continuous,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))
}

pub fn train(a: &TrainArgs) -> Result<(), Failure> {
    let cfg = booster_config(a.booster, &a.model)?;
    let data = load_csv(&a.data.data, &a.data.outcome, &a.data.treatment)?;
    let model = match &cfg {
        BoosterConfig::Tddp(c) => fit_tddp_with(&data, c, |r| {
            log::info!(
                "round {:>4}  leaves {:>3}  transformed-label variance {:.6}",
                r.round + 1,
                r.num_leaves,
                r.label_variance
            )
        })?,
        BoosterConfig::Causalgbm(c) => fit_causalgbm_with(&data, c, |it| {
            log::info!(
                "iteration {:>4}  leaves {:>3}  training loss {:.6}",
                it.iteration + 1,
                it.num_leaves,
                it.train_loss
            )
        })?,
    };
    model_io::save(&model, &a.out)?;
    log::info!("saved {} trees to {}", model.trees.len(), a.out.display());
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<(), Failure> {
    let model = model_io::load(&a.model)?;
    let scale = match a.scale {
        ScaleArg::Margin => Scale::Margin,
        ScaleArg::Probability => Scale::Probability,
    };
    let k = model.num_arms;
    let rows = load_features(&a.data, &model.feature_names)?;
    let (header, columns): (Vec<String>, Vec<Vec<f64>>) = match (a.output, model.kind) {
        (OutputArg::Outcome, BoosterKind::Tddp) => {
            return Err(Failure::Usage("tddp models predict effects only; use --output effect".into()))
        }
        (OutputArg::Outcome, BoosterKind::Causalgbm) => {
            let arm = a.arm.unwrap_or(0);
            (vec!["outcome".into()], vec![predict_outcome(&model, &rows, arm, scale)?])
        }
        (OutputArg::Effect, kind) => {
            let arms: Vec<usize> = match a.arm {
                Some(0) => {
                    return Err(Failure::Usage(
                        "invalid configuration `arm`: effects are defined for treatment arms 1 and up".into(),
                    ))
                }
                Some(arm) if arm > k => return Err(UpliftError::UnknownArm { arm, max_arm: k }.into()),
                Some(arm) => vec![arm],
                None => (1..=k).collect(),
            };
            let effects = match kind {
                BoosterKind::Tddp => vec![predict_tddp(&model, &rows)?],
                BoosterKind::Causalgbm => {
                    let m = predict_effect(&model, &rows, scale)?;
                    (1..=k).map(|arm| m.column(arm - 1).collect()).collect()
                }
            };
            let header = if arms.len() == 1 {
                vec!["effect".to_string()]
            } else {
                arms.iter().map(|a| format!("effect_{a}")).collect()
            };
            (header, arms.iter().map(|&arm| effects[arm - 1].clone()).collect())
        }
    };
    let mut out = create(&a.out)?;
    writeln!(out, "{}", header.join(",")).map_err(Failure::io)?;
    for i in 0..rows.nrows() {
        let line: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        writeln!(out, "{}", line.join(",")).map_err(Failure::io)?;
    }
    out.flush().map_err(Failure::io)?;
    Ok(())
}

fn read_scores(path: &Path, column: Option<&str>) -> Result<Vec<f64>, Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(UpliftError::from)?;
    let headers: Vec<String> = reader.headers().map_err(UpliftError::from)?.iter().map(|h| h.trim().to_string()).collect();
    let col = match column {
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            Failure::Usage(format!("invalid configuration `score_column`: `{name}` not found in {}", path.display()))
        })?,
        None => headers.iter().position(|h| h == "effect").unwrap_or(0),
    };
    let mut scores = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(UpliftError::from)?;
        let cell = record.get(col).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| UpliftError::Parse {
            row: i + 1,
            column: headers[col].clone(),
            message: format!("`{cell}` is not a number"),
        })?;
        scores.push(v);
    }
    Ok(scores)
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    let data = load_csv(&a.data.data, &a.data.outcome, &a.data.treatment)?;
    let scores = read_scores(&a.scores, a.score_column.as_deref())?;
    let curve = qini_curve(&scores, data.outcome(), data.treatment())?;
    println!("rows              {}", data.len());
    println!("auq               {:.6}", curve.auq);
    match curve.coefficient {
        Some(c) => println!("qini coefficient  {c:.6}"),
        None => println!("qini coefficient  undefined"),
    }
    if let Some(path) = &a.curve_out {
        write_curve_csv(&curve, create(path)?)?;
    }
    Ok(())
}

pub fn cv(a: &CvArgs) -> Result<(), Failure> {
    let cfg = booster_config(a.booster, &a.model)?;
    if a.folds < 2 {
        return Err(Failure::Usage(format!("invalid configuration `folds`: need at least 2, got {}", a.folds)));
    }
    let data = load_csv(&a.data.data, &a.data.outcome, &a.data.treatment)?;
    let report = cross_validate(&data, &cfg, a.folds, a.model.seed)?;
    println!("{report}");
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<(), Failure> {
    let spec = SyntheticSpec {
        n: a.n,
        p: a.p,
        treatment_ratio: a.ratio,
        effect_strength: a.effect,
        noise_sd: a.noise,
        outcome_kind: outcome_kind(a.outcome_kind),
        seed: a.seed,
    };
    spec.validate()?;
    let data = synthesize(&spec)?;
    write_csv(&data, &a.out, "y", "w", a.with_truth)?;
    println!("{}", summarize(&data));
    Ok(())
}

pub fn ablate(a: &AblateArgs) -> Result<(), Failure> {
    let causal = BoosterConfig::Causalgbm(causal_config(&a.model));
    let tddp = BoosterConfig::Tddp(tddp_config(&a.model));
    causal.validate()?;
    if a.dims.is_empty() {
        return Err(Failure::Usage("invalid configuration `dims`: list at least one feature count".into()));
    }
    let specs: Vec<SyntheticSpec> = a
        .dims
        .iter()
        .map(|&p| SyntheticSpec {
            n: a.n,
            p,
            treatment_ratio: a.ratio,
            effect_strength: a.effect,
            noise_sd: a.noise,
            outcome_kind: outcome_kind(a.outcome_kind),
            seed: a.model.seed,
        })
        .collect();
    for s in &specs {
        s.validate()?;
    }
    let rows = ablate_ensembles(&specs, &[tddp, causal])?;
    print!("{}", format_ablation_table(&rows));
    if let Some(path) = &a.out {
        write_ablation_csv(&rows, create(path)?)?;
    }
    Ok(())
}
