use serde::{Deserialize, Serialize};

/// Floor applied to logistic hessians so leaf denominators stay positive
/// when predictions saturate.
pub const HESSIAN_FLOOR: f64 = 1e-16;

/// Pointwise convex losses of an outcome `y` and a margin `y_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `(y - y_hat)^2 / 2`.
    #[default]
    Squared,
    /// Log loss with `y_hat` in log-odds and `y` in `[0, 1]`.
    Logistic,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LossKind {
    pub fn value(self, y: f64, y_hat: f64) -> f64 {
        match self {
            LossKind::Squared => 0.5 * (y - y_hat) * (y - y_hat),
            // log(1 + e^z) - y z, arranged to avoid overflow
            LossKind::Logistic => y_hat.max(0.0) + (-y_hat.abs()).exp().ln_1p() - y * y_hat,
        }
    }

    /// First and second derivative with respect to `y_hat`.
    pub fn grad_hess(self, y: f64, y_hat: f64) -> (f64, f64) {
        match self {
            LossKind::Squared => (y_hat - y, 1.0),
            LossKind::Logistic => {
                let p = sigmoid(y_hat);
                (p - y, (p * (1.0 - p)).max(HESSIAN_FLOOR))
            }
        }
    }

    /// Maps a margin to the outcome scale.
    pub fn link_inverse(self, margin: f64) -> f64 {
        match self {
            LossKind::Squared => margin,
            LossKind::Logistic => sigmoid(margin),
        }
    }
}

/// Per-row `(g, h)` at the current margins.
pub fn grad_hess(loss: LossKind, y: &[f64], y_hat: &[f64]) -> Vec<(f64, f64)> {
    y.iter().zip(y_hat).map(|(&yi, &fi)| loss.grad_hess(yi, fi)).collect()
}
