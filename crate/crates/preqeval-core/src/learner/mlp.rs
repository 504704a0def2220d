//! One-hidden-layer network: tanh trunk shared across tasks, linear
//! softmax heads. Backprop is written out directly; the layer is small
//! enough that a matrix library would be more code than the math.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Example, FeatureVector};

use super::{for_each_feature, linear, Body, HeadParams, LearnerState};

/// tanh(W1·x + b1).
pub(super) fn hidden_activations(body: &Body, in_dim: usize, features: &FeatureVector) -> Vec<f64> {
    let (w1, b1) = match body {
        Body::Mlp { w1, b1 } => (w1, b1),
        Body::None => unreachable!("mlp forward without a body"),
    };
    let mut z1 = b1.clone();
    let h = b1.len();
    for_each_feature(features, |j, x| {
        for (unit, z) in z1.iter_mut().enumerate().take(h) {
            *z += w1[unit * in_dim + j] * x;
        }
    });
    for z in &mut z1 {
        *z = libm::tanh(*z);
    }
    z1
}

struct MlpGradients {
    gw1: Vec<f64>,
    gb1: Vec<f64>,
    gw2: Vec<f64>,
    gb2: Vec<f64>,
}

/// Cross-entropy backprop for one example, scaled by `scale`.
fn accumulate_example(
    in_dim: usize,
    w2: &[f64],
    hidden: &[f64],
    probs: &[f64],
    example: &Example,
    scale: f64,
    grads: &mut MlpGradients,
) {
    let h = hidden.len();
    let k = probs.len();
    let mut dz1 = vec![0.0; h];
    for class in 0..k {
        let dz2 = (probs[class] - f64::from(class == example.label as usize)) * scale;
        grads.gb2[class] += dz2;
        let row = &w2[class * h..(class + 1) * h];
        for unit in 0..h {
            grads.gw2[class * h + unit] += dz2 * hidden[unit];
            dz1[unit] += dz2 * row[unit];
        }
    }
    for unit in 0..h {
        dz1[unit] *= 1.0 - hidden[unit] * hidden[unit];
        grads.gb1[unit] += dz1[unit];
    }
    debug_assert_eq!(grads.gw1.len(), h * in_dim);
    for_each_feature(&example.features, |j, x| {
        for (unit, &d) in dz1.iter().enumerate() {
            grads.gw1[unit * in_dim + j] += d * x;
        }
    });
}

/// One SGD step on the mean cross-entropy of `batch`; l2 decays both weight
/// matrices, biases are unregularized.
pub(super) fn mlp_step(
    state: &mut LearnerState,
    examples: &[Example],
    batch: &[usize],
    task_id: &str,
) {
    let in_dim = state.feature_spec().input_dim();
    let lr = state.hyper().learning_rate;
    let l2 = state.hyper().l2;

    // Forward passes first, borrowing the state immutably.
    let mut per_example = Vec::with_capacity(batch.len());
    {
        let head = &state.heads[task_id];
        let (w2, b2) = match &head.params {
            HeadParams::Linear { weights, bias } => (weights, bias),
            _ => unreachable!("mlp step on a non-linear head"),
        };
        for &i in batch {
            let hidden = hidden_activations(&state.body, in_dim, &examples[i].features);
            let logits = linear::logits_from_dense(w2, b2, &hidden);
            per_example.push((i, hidden, linear::softmax(&logits)));
        }
    }

    let (w1, b1) = match &mut state.body {
        Body::Mlp { w1, b1 } => (w1, b1),
        Body::None => unreachable!(),
    };
    let h = b1.len();
    let head = state.heads.get_mut(task_id).expect("head ensured by caller");
    let k = head.num_classes as usize;
    let (w2, b2) = match &mut head.params {
        HeadParams::Linear { weights, bias } => (weights, bias),
        _ => unreachable!(),
    };

    let mut grads = MlpGradients {
        gw1: vec![0.0; w1.len()],
        gb1: vec![0.0; h],
        gw2: vec![0.0; k * h],
        gb2: vec![0.0; k],
    };
    let scale = 1.0 / batch.len() as f64;
    for (i, hidden, probs) in &per_example {
        accumulate_example(in_dim, w2, hidden, probs, &examples[*i], scale, &mut grads);
    }

    for (w, g) in w1.iter_mut().zip(&grads.gw1) {
        *w -= lr * (g + l2 * *w);
    }
    for (b, g) in b1.iter_mut().zip(&grads.gb1) {
        *b -= lr * g;
    }
    for (w, g) in w2.iter_mut().zip(&grads.gw2) {
        *w -= lr * (g + l2 * *w);
    }
    for (b, g) in b2.iter_mut().zip(&grads.gb2) {
        *b -= lr * g;
    }
}

/// Per-example analytic gradient, flattened as [w1, b1, w2, b2] to match
/// `flatten_params`.
pub(super) fn mlp_grad(state: &LearnerState, example: &Example, task_id: &str) -> Vec<f64> {
    let in_dim = state.feature_spec().input_dim();
    let l2 = state.hyper().l2;
    let (w1, b1) = match &state.body {
        Body::Mlp { w1, b1 } => (w1, b1),
        Body::None => unreachable!(),
    };
    let head = &state.heads[task_id];
    let k = head.num_classes as usize;
    let (w2, b2) = match &head.params {
        HeadParams::Linear { weights, bias } => (weights, bias),
        _ => unreachable!(),
    };
    let hidden = hidden_activations(&state.body, in_dim, &example.features);
    let logits = linear::logits_from_dense(w2, b2, &hidden);
    let probs = linear::softmax(&logits);

    let mut grads = MlpGradients {
        gw1: vec![0.0; w1.len()],
        gb1: vec![0.0; b1.len()],
        gw2: vec![0.0; k * hidden.len()],
        gb2: vec![0.0; k],
    };
    accumulate_example(in_dim, w2, &hidden, &probs, example, 1.0, &mut grads);
    for (g, w) in grads.gw1.iter_mut().zip(w1) {
        *g += l2 * w;
    }
    for (g, w) in grads.gw2.iter_mut().zip(w2) {
        *g += l2 * w;
    }

    let mut out = grads.gw1;
    out.extend_from_slice(&grads.gb1);
    out.extend_from_slice(&grads.gw2);
    out.extend_from_slice(&grads.gb2);
    out
}
