//! The two task losses, evaluated in log space from raw logits.
//!
//! Tool presence: per-tool binary cross-entropy, summed over tools and
//! averaged over the batch. Phase recognition: softmax cross-entropy
//! averaged over the batch. The combined loss is `a * L_T + b * L_P`.

use crate::error::{EndoNetError, Result};
use crate::types::{sigmoid, LossWeights, PhaseLogits, PhaseTarget, ToolConfidence, ToolTarget};

/// Numerically stable `-[k log sigma(v) + (1-k) log(1-sigma(v))]`.
fn bce_with_logit(v: f64, k: f64) -> f64 {
    v.max(0.0) - v * k + (-v.abs()).exp().ln_1p()
}

fn check_batch<T, U>(logits: &[T], targets: &[U]) -> Result<()> {
    if logits.is_empty() {
        return Err(EndoNetError::EmptyBatch);
    }
    if logits.len() != targets.len() {
        return Err(EndoNetError::BatchMismatch {
            left: logits.len(),
            right: targets.len(),
        });
    }
    Ok(())
}

/// Tool presence loss: `-(1/N_i) sum_t sum_i [k log s(v) + (1-k) log(1-s(v))]`
/// (mean over images, sum over tools).
pub fn tool_loss(logits: &[ToolConfidence], targets: &[ToolTarget]) -> Result<f64> {
    check_batch(logits, targets)?;
    let n = logits.len() as f64;
    let mut total = 0.0;
    for (l, t) in logits.iter().zip(targets) {
        for (&v, k) in l.0.iter().zip(t.indicator()) {
            total += bce_with_logit(v, k);
        }
    }
    let loss = total / n;
    if !loss.is_finite() {
        return Err(EndoNetError::NonFiniteLoss);
    }
    Ok(loss)
}

/// Tool loss plus its gradient with respect to each logit,
/// `(sigma(v) - k) / N_i`.
pub fn tool_loss_with_grads(
    logits: &[ToolConfidence],
    targets: &[ToolTarget],
) -> Result<(f64, Vec<[f64; 7]>)> {
    let loss = tool_loss(logits, targets)?;
    let n = logits.len() as f64;
    let grads = logits
        .iter()
        .zip(targets)
        .map(|(l, t)| {
            let mut g = [0.0; 7];
            for ((g, &v), k) in g.iter_mut().zip(&l.0).zip(t.indicator()) {
                *g = (sigmoid(v) - k) / n;
            }
            g
        })
        .collect();
    Ok((loss, grads))
}

fn log_softmax_terms(w: &[f64; 7]) -> ([f64; 7], f64) {
    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut exp = [0.0; 7];
    let mut sum = 0.0;
    for (e, &v) in exp.iter_mut().zip(w) {
        *e = (v - max).exp();
        sum += *e;
    }
    (exp, max + sum.ln())
}

/// Phase loss: `-(1/N_i) sum_i sum_p l log phi(w)` with `phi` the softmax,
/// evaluated as `logsumexp(w) - w[true]` per image.
pub fn phase_loss(logits: &[PhaseLogits], targets: &[PhaseTarget]) -> Result<f64> {
    check_batch(logits, targets)?;
    let n = logits.len() as f64;
    let mut total = 0.0;
    for (l, t) in logits.iter().zip(targets) {
        let (_, lse) = log_softmax_terms(&l.0);
        total += lse - l.0[t.index()];
    }
    let loss = total / n;
    if !loss.is_finite() {
        return Err(EndoNetError::NonFiniteLoss);
    }
    Ok(loss)
}

/// Phase loss plus its per-logit gradient, `(phi(w) - l) / N_i`.
pub fn phase_loss_with_grads(
    logits: &[PhaseLogits],
    targets: &[PhaseTarget],
) -> Result<(f64, Vec<[f64; 7]>)> {
    let loss = phase_loss(logits, targets)?;
    let n = logits.len() as f64;
    let grads = logits
        .iter()
        .zip(targets)
        .map(|(l, t)| {
            let (exp, _) = log_softmax_terms(&l.0);
            let sum: f64 = exp.iter().sum();
            let mut g = [0.0; 7];
            for (p, (g, e)) in g.iter_mut().zip(exp).enumerate() {
                *g = (e / sum - if p == t.index() { 1.0 } else { 0.0 }) / n;
            }
            g
        })
        .collect();
    Ok((loss, grads))
}

/// Combined loss `a * L_T + b * L_P`.
pub fn total_loss(lt: f64, lp: f64, weights: &LossWeights) -> Result<f64> {
    if !(lt.is_finite() && lp.is_finite()) {
        return Err(EndoNetError::NonFiniteLoss);
    }
    Ok(weights.a * lt + weights.b * lp)
}

/// Softmax cross-entropy over an arbitrary class count, for the proxy
/// pre-training head. Returns the loss and its gradient w.r.t. the logits.
pub fn softmax_ce(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    let lse = max + sum.ln();
    let loss = lse - logits[target];
    let grad = exp
        .iter()
        .enumerate()
        .map(|(i, e)| e / sum - if i == target { 1.0 } else { 0.0 })
        .collect();
    (loss, grad)
}
