use crate::error::{Error, Result};

use super::tensor::Tensor4;

/// Probabilities are clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy and its gradient with respect to `pred`.
///
/// Targets may be soft (any value in [0, 1]). The gradient is taken at the
/// clamped probability and passed straight through the clamp, so saturated
/// outputs still receive a finite, correctly signed signal.
pub fn bce_loss(pred: &Tensor4, target: &Tensor4) -> Result<(f64, Tensor4)> {
    pred.same_dims(target, "bce prediction vs target")?;
    if target.data().iter().any(|y| !(0.0..=1.0).contains(y)) {
        return Err(Error::ShapeMismatch("bce targets must lie in [0, 1]".into()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, y)| {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
            (p - y) / (p * (1.0 - p)) / n
        })
        .collect();
    Ok(((loss / n).max(0.0), Tensor4::from_raw(pred.dims(), grad)))
}
