//! Synthetic randomized experiments with known treatment effects.
//!
//! Features are independent `U(0, 1)`. The control outcome mean is a smooth
//! function of the first three features and the effect is
//! `effect_strength * sigmoid(z(x))`, where `z` mixes two pairwise
//! interactions and one main effect of the first five features. Every term
//! of `z` is symmetric around zero, so `E[sigmoid(z)] = 1/2` and the average
//! effect is exactly `effect_strength / 2`. Features beyond the fifth are
//! noise. With fewer than five features, absent coordinates are held at 0.5.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Matrix, UpliftDataset};
use crate::error::{Result, UpliftError};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub treatment_ratio: f64,
    pub effect_strength: f64,
    pub noise_sd: f64,
    pub outcome_kind: OutcomeKind,
    pub seed: u64,
}

const BASELINE_MEAN: f64 = 0.48;
const BASELINE_AMPLITUDES: [f64; 3] = [0.06, 0.04, 0.04];
const EFFECT_WEIGHTS: [f64; 3] = [0.6, 0.5, 0.6];

fn coord(x: &[f64], j: usize) -> f64 {
    x.get(j).copied().unwrap_or(0.5)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `E[y(0) | x]`. Ranges over `[0.373, 0.587]` with mean 0.48.
pub fn baseline_outcome(x: &[f64]) -> f64 {
    let [a, b, c] = BASELINE_AMPLITUDES;
    BASELINE_MEAN
        + a * (PI * (coord(x, 0) - 0.5)).sin()
        + b * (coord(x, 1) - 0.5)
        + c * (coord(x, 2).powi(2) - 1.0 / 3.0)
}

/// Effect per unit of `effect_strength`, in `(0.15, 0.85)` with mean 1/2.
pub fn effect_shape(x: &[f64]) -> f64 {
    let [a, b, c] = EFFECT_WEIGHTS;
    let z = a * 4.0 * (coord(x, 0) - 0.5) * (coord(x, 1) - 0.5)
        + b * 4.0 * (coord(x, 2) - 0.5) * (coord(x, 3) - 0.5)
        + c * 2.0 * (coord(x, 4) - 0.5);
    sigmoid(z)
}

fn max_baseline() -> f64 {
    let [a, b, c] = BASELINE_AMPLITUDES;
    BASELINE_MEAN + a + b * 0.5 + c * (2.0 / 3.0)
}

fn max_effect_shape() -> f64 {
    sigmoid(EFFECT_WEIGHTS.iter().sum())
}

impl SyntheticSpec {
    /// Largest effect strength that keeps binary outcome probabilities in `[0, 1]`.
    pub fn max_binary_effect_strength() -> f64 {
        (1.0 - max_baseline()) / max_effect_shape()
    }

    /// Calibrated to 200,000 rows, mean label 0.60, half treated and a 50%
    /// relative uplift (control mean 0.48, treated mean 0.72).
    pub fn benchmark(p: usize, seed: u64) -> Self {
        SyntheticSpec {
            n: 200_000,
            p,
            treatment_ratio: 0.5,
            effect_strength: 0.48,
            noise_sd: 0.0,
            outcome_kind: OutcomeKind::Binary,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(UpliftError::config("n", "need at least 2 rows"));
        }
        if self.p == 0 {
            return Err(UpliftError::config("p", "need at least 1 feature"));
        }
        if !(self.treatment_ratio > 0.0 && self.treatment_ratio < 1.0) {
            return Err(UpliftError::config("ratio", "treatment ratio must lie in (0, 1)"));
        }
        if !(self.effect_strength >= 0.0 && self.effect_strength.is_finite()) {
            return Err(UpliftError::config("effect", "effect strength must be >= 0"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(UpliftError::config("noise", "noise sd must be >= 0"));
        }
        if self.outcome_kind == OutcomeKind::Binary
            && self.effect_strength > Self::max_binary_effect_strength()
        {
            return Err(UpliftError::config(
                "effect",
                format!(
                    "binary outcomes allow effect strength up to {:.4}",
                    Self::max_binary_effect_strength()
                ),
            ));
        }
        Ok(())
    }
}

pub fn synthesize(spec: &SyntheticSpec) -> Result<UpliftDataset> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, Stream::Synthesize, 0);
    let (n, p) = (spec.n, spec.p);
    let mut features = Vec::with_capacity(n * p);
    let mut outcome = Vec::with_capacity(n);
    let mut treatment = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        features.extend((0..p).map(|_| rng.random::<f64>()));
        let x = &features[start..];
        let tau = spec.effect_strength * effect_shape(x);
        let w = usize::from(rng.random::<f64>() < spec.treatment_ratio);
        let mean = baseline_outcome(x) + w as f64 * tau;
        let y = match spec.outcome_kind {
            OutcomeKind::Binary => f64::from(u8::from(rng.random::<f64>() < mean)),
            OutcomeKind::Continuous => {
                let eps: f64 = rng.sample(StandardNormal);
                mean + spec.noise_sd * eps
            }
        };
        outcome.push(y);
        treatment.push(w);
        truth.push(tau);
    }
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    UpliftDataset::new(Matrix::new(n, p, features)?, outcome, treatment, names)?
        .with_true_effect(Matrix::new(n, 1, truth)?)
}
