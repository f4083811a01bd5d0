use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Row-wise max-shifted softmax.
pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row /= s;
    }
    out
}

/// Mean negative log-likelihood of `labels` under `softmax(logits)` and its
/// gradient `(softmax - onehot) / batch` w.r.t. the logits.
pub fn cross_entropy_loss(logits: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (batch, classes) = logits.dim();
    if labels.len() != batch {
        return Err(Error::Argument(format!(
            "{} labels for a batch of {batch}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::Argument(format!("label {bad} outside 0..{classes}")));
    }
    if batch == 0 {
        return Ok((0.0, Array2::zeros((0, classes))));
    }
    let mut total = 0.0;
    for (row, &y) in logits.axis_iter(Axis(0)).zip(labels) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let others: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y)
            .map(|(_, &z)| (z - max).exp())
            .sum();
        let own = (row[y] - max).exp();
        // ln(1 + tiny) keeps precision when the true class dominates
        total += if row[y] == max {
            others.ln_1p()
        } else {
            (max - row[y]) + (own + others).ln()
        };
    }
    let mut grad = softmax_rows(logits);
    for (mut row, &y) in grad.axis_iter_mut(Axis(0)).zip(labels) {
        row[y] -= 1.0;
    }
    grad /= batch as f64;
    Ok((total / batch as f64, grad))
}
