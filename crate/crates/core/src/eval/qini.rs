use std::io::Write;

use serde::Serialize;

use crate::error::{Result, UpliftError};

/// Cumulative incremental gain of a score ranking.
///
/// Points are recorded at the end of every block of tied scores; inside a
/// block the gain is linear in the fraction targeted, so the piecewise-linear
/// curve through the points is the block-averaged curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QiniCurve {
    /// `(fraction targeted, incremental gain)`, from `(0, 0)` to `(1, total gain)`.
    pub points: Vec<(f64, f64)>,
    /// Trapezoidal area under the curve.
    pub auq: f64,
    /// Normalized coefficient; `None` when the perfect and random areas coincide.
    pub coefficient: Option<f64>,
}

fn check_inputs(len: usize, y: &[f64], w: &[usize]) -> Result<()> {
    if y.len() != len {
        return Err(UpliftError::Shape { what: "outcome values", expected: len, found: y.len() });
    }
    if w.len() != len {
        return Err(UpliftError::Shape { what: "treatment values", expected: len, found: w.len() });
    }
    if let Some(&a) = w.iter().find(|&&a| a > 1) {
        return Err(UpliftError::Unsupported(format!(
            "qini needs binary treatment, found arm {a}"
        )));
    }
    if !w.contains(&0) {
        return Err(UpliftError::Validation("qini needs at least one control row".into()));
    }
    if !w.contains(&1) {
        return Err(UpliftError::Validation("qini needs at least one treated row".into()));
    }
    Ok(())
}

fn gain(y1: f64, y0: f64, n1: u64, n0: u64) -> f64 {
    if n0 == 0 {
        y1
    } else {
        y1 - y0 * n1 as f64 / n0 as f64
    }
}

/// Walks `order`, emitting a point whenever `block_ends(pos)` holds.
fn points_along(order: &[usize], y: &[f64], w: &[usize], block_ends: impl Fn(usize) -> bool) -> Vec<(f64, f64)> {
    let n = order.len();
    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    let (mut y1, mut y0, mut n1, mut n0) = (0.0, 0.0, 0u64, 0u64);
    for (pos, &i) in order.iter().enumerate() {
        if w[i] == 1 {
            y1 += y[i];
            n1 += 1;
        } else {
            y0 += y[i];
            n0 += 1;
        }
        if pos + 1 == n || block_ends(pos) {
            points.push(((pos + 1) as f64 / n as f64, gain(y1, y0, n1, n0)));
        }
    }
    points
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|p| (p[1].0 - p[0].0) * (p[0].1 + p[1].1) * 0.5).sum()
}

/// Area of the straight chord from `(0, 0)` to `(1, total gain)`.
fn random_area(points: &[(f64, f64)]) -> f64 {
    0.5 * points.last().map_or(0.0, |p| p.1)
}

/// Rows ordered as well as the observed outcomes allow.
///
/// Binary outcomes: treated responders and control non-responders (in index
/// order), then treated non-responders, then control responders. Otherwise
/// treated rows by outcome descending, then control rows by outcome ascending.
fn perfect_order(y: &[f64], w: &[usize]) -> Vec<usize> {
    let binary = y.iter().all(|&v| v == 0.0 || v == 1.0);
    let rows = 0..y.len();
    if binary {
        let class = |i: usize| match (w[i], y[i] == 1.0) {
            (1, true) | (0, false) => 0,
            (1, false) => 1,
            _ => 2,
        };
        let mut order: Vec<usize> = rows.collect();
        order.sort_by_key(|&i| class(i));
        order
    } else {
        let mut treated: Vec<usize> = rows.clone().filter(|&i| w[i] == 1).collect();
        let mut control: Vec<usize> = rows.filter(|&i| w[i] == 0).collect();
        treated.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
        control.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        treated.extend(control);
        treated
    }
}

/// Qini curve of `scores` (higher means target first) on outcomes `y` and
/// binary treatment `w`.
pub fn qini_curve(scores: &[f64], y: &[f64], w: &[usize]) -> Result<QiniCurve> {
    check_inputs(scores.len(), y, w)?;
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(UpliftError::Validation(format!("score at row {i} is NaN")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("scores are not NaN"));
    let points = points_along(&order, y, w, |pos| scores[order[pos]] != scores[order[pos + 1]]);
    let mut curve = QiniCurve { auq: trapezoid(&points), points, coefficient: None };
    curve.coefficient = qini_coefficient(&curve, y, w).ok();
    Ok(curve)
}

/// `(AUQ - AUQ_random) / (AUQ_perfect - AUQ_random)`.
pub fn qini_coefficient(curve: &QiniCurve, y: &[f64], w: &[usize]) -> Result<f64> {
    check_inputs(y.len(), y, w)?;
    let perfect = points_along(&perfect_order(y, w), y, w, |_| true);
    let random = random_area(&perfect);
    let denom = trapezoid(&perfect) - random;
    if denom == 0.0 {
        return Err(UpliftError::Undefined(
            "perfect ordering has the same area as random targeting".into(),
        ));
    }
    Ok((curve.auq - random_area(&curve.points)) / denom)
}

/// Qini coefficient of a score vector.
pub fn qini_score(scores: &[f64], y: &[f64], w: &[usize]) -> Result<f64> {
    let curve = qini_curve(scores, y, w)?;
    qini_coefficient(&curve, y, w)
}

/// Writes `fraction,gain` rows with a header.
pub fn write_curve_csv(curve: &QiniCurve, out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["fraction", "gain"])?;
    for (f, g) in &curve.points {
        writer.write_record([f.to_string(), g.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}
