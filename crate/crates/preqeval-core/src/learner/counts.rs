//! Closed-form count learners: smoothed class prior and multinomial
//! naive Bayes.

use alloc::vec::Vec;

use crate::data::FeatureVector;

/// Additively smoothed class frequencies: (count + α) / (n + αK).
pub(super) fn prior_probs(label_counts: &[u64], alpha: f64) -> Vec<f64> {
    let n: u64 = label_counts.iter().sum();
    let denom = n as f64 + alpha * label_counts.len() as f64;
    label_counts.iter().map(|&c| (c as f64 + alpha) / denom).collect()
}

/// Posterior over classes for a bag of token counts, smoothed per class and
/// per token, computed in log space and normalized by log-sum-exp.
pub(super) fn naive_bayes_probs(
    label_counts: &[u64],
    token_counts: &[u64],
    vocab: usize,
    features: &FeatureVector,
    alpha: f64,
) -> Vec<f64> {
    let k = label_counts.len();
    let n: u64 = label_counts.iter().sum();
    let prior_denom = n as f64 + alpha * k as f64;
    let mut scores = Vec::with_capacity(k);
    for class in 0..k {
        let row = &token_counts[class * vocab..(class + 1) * vocab];
        let total: u64 = row.iter().sum();
        let token_denom = total as f64 + alpha * vocab as f64;
        let mut score = libm::log((label_counts[class] as f64 + alpha) / prior_denom);
        if let FeatureVector::Sparse(entries) = features {
            for &(idx, count) in entries {
                let p = (row[idx as usize] as f64 + alpha) / token_denom;
                score += count as f64 * libm::log(p);
            }
        }
        scores.push(score);
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = scores.iter().map(|&s| libm::exp(s - max)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    probs
}
