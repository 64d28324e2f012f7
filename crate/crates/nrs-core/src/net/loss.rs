//! Losses: softmax cross-entropy for classification, mean squared error for
//! regression. Both return the batch-mean loss together with the gradient
//! w.r.t. the network output, already scaled for the mean.

use crate::error::{NrsError, Result};
use crate::tensor::DenseTensor;

/// Row-wise softmax with max subtraction.
pub fn softmax(logits: &DenseTensor) -> DenseTensor {
    let k = logits.shape()[1];
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(k) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean cross-entropy of softmax(logits) against integer labels, with
/// gradient `(softmax(logits) - one_hot(label)) / N`.
pub fn softmax_cross_entropy(
    logits: &DenseTensor,
    labels: &[usize],
) -> Result<(f64, DenseTensor)> {
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != n {
        return Err(NrsError::dim("softmax_cross_entropy", &[labels.len()], &[n]));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(NrsError::Label { label: bad, classes: k });
    }
    let mut grad = softmax(logits);
    let mut loss = 0.0;
    let inv_n = 1.0 / n as f64;
    for (row, &label) in grad.data_mut().chunks_exact_mut(k).zip(labels) {
        loss += -row[label].max(f64::MIN_POSITIVE).ln();
        row[label] -= 1.0;
        for v in row.iter_mut() {
            *v *= inv_n;
        }
    }
    Ok((loss * inv_n, grad))
}

/// Mean squared error over all prediction elements, with gradient
/// `2 (pred - target) / count`.
pub fn mse_loss(pred: &DenseTensor, target: &DenseTensor) -> Result<(f64, DenseTensor)> {
    if pred.shape() != target.shape() {
        return Err(NrsError::dim("mse_loss", pred.shape(), target.shape()));
    }
    let count = pred.len() as f64;
    let mut grad = pred.sub(target)?;
    let mut loss = 0.0;
    for g in grad.data_mut() {
        loss += *g * *g;
        *g *= 2.0 / count;
    }
    Ok((loss / count, grad))
}
