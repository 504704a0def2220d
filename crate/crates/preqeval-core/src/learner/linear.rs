//! Softmax-linear machinery shared by the logistic learner and the MLP
//! output layer, plus the logistic SGD step.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Example, FeatureVector};

use super::{for_each_feature, HeadParams, LearnerState};

/// logits[k] = bias[k] + Σ_j weights[k·d + j]·x_j over a feature vector.
pub(super) fn logits_from_features(
    weights: &[f64],
    bias: &[f64],
    in_dim: usize,
    features: &FeatureVector,
) -> Vec<f64> {
    let mut logits = bias.to_vec();
    let k = bias.len();
    for_each_feature(features, |j, x| {
        for (class, logit) in logits.iter_mut().enumerate().take(k) {
            *logit += weights[class * in_dim + j] * x;
        }
    });
    logits
}

/// Same contraction for an already-dense activation vector.
pub(super) fn logits_from_dense(weights: &[f64], bias: &[f64], input: &[f64]) -> Vec<f64> {
    let d = input.len();
    bias.iter()
        .enumerate()
        .map(|(class, &b)| {
            let row = &weights[class * d..(class + 1) * d];
            b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

/// Max-subtracted softmax.
pub(super) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    probs
}

/// ln softmax(logits)[y], computed without forming the softmax.
pub(super) fn log_softmax_at(logits: &[f64], y: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = libm::log(logits.iter().map(|&z| libm::exp(z - max)).sum::<f64>());
    (logits[y] - max) - log_norm
}

/// One SGD step on the mean cross-entropy of `batch`, with l2 decay on the
/// weight matrix (not the bias).
pub(super) fn logistic_step(
    state: &mut LearnerState,
    examples: &[Example],
    batch: &[usize],
    task_id: &str,
) {
    let in_dim = state.feature_spec().input_dim();
    let lr = state.hyper().learning_rate;
    let l2 = state.hyper().l2;
    let head = state.heads.get_mut(task_id).expect("head ensured by caller");
    let k = head.num_classes as usize;
    let (weights, bias) = match &mut head.params {
        HeadParams::Linear { weights, bias } => (weights, bias),
        _ => unreachable!("logistic step on a non-linear head"),
    };
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = vec![0.0; k];
    let scale = 1.0 / batch.len() as f64;
    for &i in batch {
        let ex = &examples[i];
        let logits = logits_from_features(weights, bias, in_dim, &ex.features);
        let probs = softmax(&logits);
        for class in 0..k {
            let dz = (probs[class] - f64::from(class == ex.label as usize)) * scale;
            grad_b[class] += dz;
            for_each_feature(&ex.features, |j, x| {
                grad_w[class * in_dim + j] += dz * x;
            });
        }
    }
    for (w, g) in weights.iter_mut().zip(&grad_w) {
        *w -= lr * (g + l2 * *w);
    }
    for (b, g) in bias.iter_mut().zip(&grad_b) {
        *b -= lr * g;
    }
}

/// Per-example analytic gradient of the training loss, flattened in the
/// same order as `flatten_params`: head weights then head bias.
pub(super) fn logistic_grad(state: &LearnerState, example: &Example, task_id: &str) -> Vec<f64> {
    let in_dim = state.feature_spec().input_dim();
    let l2 = state.hyper().l2;
    let head = &state.heads[task_id];
    let k = head.num_classes as usize;
    let (weights, bias) = match &head.params {
        HeadParams::Linear { weights, bias } => (weights, bias),
        _ => unreachable!(),
    };
    let logits = logits_from_features(weights, bias, in_dim, &example.features);
    let probs = softmax(&logits);
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = vec![0.0; k];
    for class in 0..k {
        let dz = probs[class] - f64::from(class == example.label as usize);
        grad_b[class] = dz;
        for_each_feature(&example.features, |j, x| {
            grad_w[class * in_dim + j] += dz * x;
        });
    }
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    grad_w.extend_from_slice(&grad_b);
    grad_w
}
