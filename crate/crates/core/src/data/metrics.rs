//! Regression metrics.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    /// `None` when the targets have zero variance (R² undefined).
    pub r2: Option<f64>,
}

pub fn evaluate(predictions: &[f64], targets: &[f64]) -> Result<Metrics> {
    if predictions.len() != targets.len() {
        return Err(Error::dims(targets.len(), predictions.len()));
    }
    if targets.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty prediction set"));
    }
    let n = targets.len() as f64;
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    let mean = targets.iter().sum::<f64>() / n;
    let sst: f64 = targets.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r2 = (sst > 0.0).then(|| 1.0 - sse / sst);
    Ok(Metrics { mse: sse / n, r2 })
}

/// Mean squared residual of a fit, `(1/n) Σ (f(x_i) - y_i)²`.
///
/// This is the quantity the distance-weighted term of the objective
/// minimizes; numerically it is the MSE.
pub fn mean_functional_margin(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    evaluate(predictions, targets).map(|m| m.mse)
}
