//! Probabilistic learners with deterministic training.
//!
//! Every learner predicts a distribution over labels and trains as a pure
//! function of (kind, hyperparameters, dataset bytes, seeds): two processes
//! running the same operation sequence produce bitwise-identical states.
//! That guarantee is what lets an encoder and a decoder train in lockstep
//! and agree on every predictive distribution without communicating.
//!
//! A state owns one shared body (empty for all kinds except the MLP) and a
//! map of per-task output heads. Training on one task touches the shared
//! body and that task's head only.

mod counts;
mod linear;
mod mlp;
mod serial;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Example, FeatureSpec, FeatureVector, LabelSpace};
use crate::error::{Error, Result};
use crate::rng;

/// Smallest probability any predicted class may carry. Distributions are
/// renormalized after clamping, so codelengths stay finite even when a
/// learner is confidently wrong.
pub const EPSILON_FLOOR: f64 = 1.0 / 1_048_576.0; // 2^-20

/// The learner zoo, ordered roughly by capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    /// Predicts 1/K always; the do-nothing baseline.
    Uniform,
    /// Smoothed class-frequency estimate, ignores features.
    Prior,
    /// Multinomial naive Bayes over sparse token counts.
    NaiveBayes,
    /// Multinomial logistic regression, dense or sparse inputs.
    LogisticRegression,
    /// One hidden layer (tanh), linear softmax heads.
    Mlp,
}

impl LearnerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::Uniform => "uniform",
            LearnerKind::Prior => "prior",
            LearnerKind::NaiveBayes => "naive_bayes",
            LearnerKind::LogisticRegression => "logistic_regression",
            LearnerKind::Mlp => "mlp",
        }
    }

    /// Inverse of `name`, for configs and report labels.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "uniform" => Some(LearnerKind::Uniform),
            "prior" => Some(LearnerKind::Prior),
            "naive_bayes" => Some(LearnerKind::NaiveBayes),
            "logistic_regression" => Some(LearnerKind::LogisticRegression),
            "mlp" => Some(LearnerKind::Mlp),
            _ => None,
        }
    }

    fn is_gradient_trained(&self) -> bool {
        matches!(self, LearnerKind::LogisticRegression | LearnerKind::Mlp)
    }
}

/// Everything that determines training besides the data itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub l2: f64,
    /// Number of mini-batch updates per fit call (count learners ignore it).
    pub iterations: u64,
    pub batch_size: u64,
    /// Additive smoothing for the count-based learners.
    pub smoothing_alpha: f64,
    /// Hidden-layer width; used by the MLP only.
    pub hidden_width: u64,
    pub init_seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            learning_rate: 0.1,
            l2: 0.0,
            iterations: 50,
            batch_size: 8,
            smoothing_alpha: 1.0,
            hidden_width: 16,
            init_seed: 0,
        }
    }
}

impl HyperParams {
    /// Check only the fields the given kind actually consumes.
    pub fn validate_for(&self, kind: LearnerKind) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidHyper(msg.to_string()));
        match kind {
            LearnerKind::Uniform => {}
            LearnerKind::Prior | LearnerKind::NaiveBayes => {
                // `<=` plus an explicit NaN check rejects everything but a
                // genuinely positive value.
                if self.smoothing_alpha <= 0.0 || self.smoothing_alpha.is_nan() {
                    return fail("smoothing_alpha must be positive");
                }
            }
            LearnerKind::LogisticRegression | LearnerKind::Mlp => {
                if self.learning_rate <= 0.0 || self.learning_rate.is_nan() {
                    return fail("learning_rate must be positive");
                }
                if self.l2 < 0.0 || self.l2.is_nan() {
                    return fail("l2 must be non-negative");
                }
                if self.iterations == 0 {
                    return fail("iterations must be positive");
                }
                if self.batch_size == 0 {
                    return fail("batch_size must be positive");
                }
                if kind == LearnerKind::Mlp && self.hidden_width == 0 {
                    return fail("hidden_width must be positive");
                }
            }
        }
        Ok(())
    }
}

/// Whether a fit call continues from the current parameters or restarts
/// from the initial ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRegime {
    WarmStart,
    FromScratch,
}

/// A distribution over the K labels of one head, floored and normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    probs: Vec<f64>,
}

impl PredictiveDistribution {
    fn from_floored(probs: Vec<f64>) -> Self {
        PredictiveDistribution { probs }
    }

    /// The maximum-entropy distribution over `k` labels.
    pub fn uniform(k: u32) -> Self {
        PredictiveDistribution { probs: vec![1.0 / k as f64; k as usize] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> u32 {
        self.probs.len() as u32
    }

    /// Code cost of `label` in bits under this distribution.
    pub fn bits_for(&self, label: u32) -> f64 {
        -libm::log2(self.probs[label as usize])
    }

    /// Most probable label; ties go to the lowest index.
    pub fn argmax(&self) -> u32 {
        let mut best = 0usize;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best as u32
    }
}

/// Clamp entries below the floor to exactly the floor and rescale the rest,
/// repeating until stable. No-op (bit-exact) when nothing is below the floor.
pub(crate) fn floor_probs(probs: &mut [f64]) {
    if probs.iter().all(|&p| p >= EPSILON_FLOOR) {
        return;
    }
    let mut clamped = vec![false; probs.len()];
    loop {
        let mut changed = false;
        for (i, p) in probs.iter_mut().enumerate() {
            if !clamped[i] && *p < EPSILON_FLOOR {
                clamped[i] = true;
                changed = true;
            }
        }
        if !changed {
            return;
        }
        let n_clamped = clamped.iter().filter(|&&c| c).count();
        let free_mass = 1.0 - EPSILON_FLOOR * n_clamped as f64;
        let free_sum: f64 = probs
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| !c)
            .map(|(&p, _)| p)
            .sum();
        for (i, p) in probs.iter_mut().enumerate() {
            if clamped[i] {
                *p = EPSILON_FLOOR;
            } else {
                *p *= free_mass / free_sum;
            }
        }
    }
}

/// Shared trunk; only the MLP has one.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Body {
    None,
    Mlp { w1: Vec<f64>, b1: Vec<f64> },
}

/// Per-task output parameters. The variant is fixed by the learner kind.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Head {
    pub(crate) num_classes: u32,
    pub(crate) params: HeadParams,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum HeadParams {
    Unit,
    Counts { label_counts: Vec<u64> },
    TokenCounts { label_counts: Vec<u64>, token_counts: Vec<u64> },
    Linear { weights: Vec<f64>, bias: Vec<f64> },
}

/// Name of the head created by `init`.
pub const DEFAULT_HEAD: &str = "default";

/// A learner: shared body, per-task heads, and the hyperparameters that
/// drive its training. Immutable in the public API; `fit` returns a new
/// value.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    kind: LearnerKind,
    label_space: LabelSpace,
    feature_spec: FeatureSpec,
    hyper: HyperParams,
    trained_on_count: u64,
    pub(crate) body: Body,
    pub(crate) heads: BTreeMap<String, Head>,
}

impl LearnerState {
    /// Fresh learner with a deterministic initial body and one default head.
    pub fn init(
        kind: LearnerKind,
        label_space: LabelSpace,
        feature_spec: FeatureSpec,
        hyper: HyperParams,
    ) -> Result<LearnerState> {
        hyper.validate_for(kind)?;
        if kind == LearnerKind::NaiveBayes && !matches!(feature_spec, FeatureSpec::Sparse { .. }) {
            return Err(Error::IncompatibleLearner(String::from(
                "naive_bayes requires sparse features",
            )));
        }
        let body = Self::fresh_body(kind, &feature_spec, &hyper);
        let mut state = LearnerState {
            kind,
            label_space,
            feature_spec,
            hyper,
            trained_on_count: 0,
            body,
            heads: BTreeMap::new(),
        };
        let head = state.fresh_head(label_space.num_classes());
        state.heads.insert(String::from(DEFAULT_HEAD), head);
        Ok(state)
    }

    fn fresh_body(kind: LearnerKind, feature_spec: &FeatureSpec, hyper: &HyperParams) -> Body {
        match kind {
            LearnerKind::Mlp => {
                let d = feature_spec.input_dim();
                let h = hyper.hidden_width as usize;
                let mut rng = rng::seeded(hyper.init_seed);
                let bound = libm::sqrt(6.0 / (d + h) as f64);
                let w1 = (0..h * d)
                    .map(|_| rand::Rng::random_range(&mut rng, -bound..bound))
                    .collect();
                Body::Mlp { w1, b1: vec![0.0; h] }
            }
            _ => Body::None,
        }
    }

    /// New head parameters for this kind. Gradient-trained heads start at
    /// zero, so an untrained head predicts the uniform distribution.
    fn fresh_head(&self, num_classes: u32) -> Head {
        let k = num_classes as usize;
        let params = match self.kind {
            LearnerKind::Uniform => HeadParams::Unit,
            LearnerKind::Prior => HeadParams::Counts { label_counts: vec![0; k] },
            LearnerKind::NaiveBayes => {
                let vocab = self.feature_spec.input_dim();
                HeadParams::TokenCounts {
                    label_counts: vec![0; k],
                    token_counts: vec![0; k * vocab],
                }
            }
            LearnerKind::LogisticRegression => {
                let d = self.feature_spec.input_dim();
                HeadParams::Linear { weights: vec![0.0; k * d], bias: vec![0.0; k] }
            }
            LearnerKind::Mlp => {
                let h = self.hyper.hidden_width as usize;
                HeadParams::Linear { weights: vec![0.0; k * h], bias: vec![0.0; k] }
            }
        };
        Head { num_classes, params }
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn label_space(&self) -> LabelSpace {
        self.label_space
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        self.feature_spec
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn trained_on_count(&self) -> u64 {
        self.trained_on_count
    }

    pub fn has_head(&self, task_id: &str) -> bool {
        self.heads.contains_key(task_id)
    }

    pub fn head_ids(&self) -> impl Iterator<Item = &str> {
        self.heads.keys().map(String::as_str)
    }

    pub fn head_num_classes(&self, task_id: &str) -> Result<u32> {
        self.head(task_id).map(|h| h.num_classes)
    }

    fn head(&self, task_id: &str) -> Result<&Head> {
        self.heads
            .get(task_id)
            .ok_or_else(|| Error::UnknownHead(task_id.to_string()))
    }

    /// Same parameters under different hyperparameters (used to hand a
    /// warm state a new training configuration).
    pub fn with_hyper(&self, hyper: HyperParams) -> Result<LearnerState> {
        hyper.validate_for(self.kind)?;
        let mut next = self.clone();
        next.hyper = hyper;
        Ok(next)
    }

    /// Add a deterministically initialized head for a new task. The shared
    /// body and all existing heads are untouched.
    pub fn add_head(&self, task_id: &str, label_space: LabelSpace) -> Result<LearnerState> {
        if self.heads.contains_key(task_id) {
            return Err(Error::DuplicateHead(task_id.to_string()));
        }
        let mut next = self.clone();
        let head = next.fresh_head(label_space.num_classes());
        next.heads.insert(task_id.to_string(), head);
        Ok(next)
    }

    pub(crate) fn ensure_head_mut(&mut self, task_id: &str, num_classes: u32) {
        if !self.heads.contains_key(task_id) {
            let head = self.fresh_head(num_classes);
            self.heads.insert(task_id.to_string(), head);
        }
    }

    /// Reset body and every head to their initial values, as produced by
    /// `init` followed by the same `add_head` calls.
    fn reinitialize(&mut self) {
        self.body = Self::fresh_body(self.kind, &self.feature_spec, &self.hyper);
        let sizes: Vec<(String, u32)> = self
            .heads
            .iter()
            .map(|(id, h)| (id.clone(), h.num_classes))
            .collect();
        self.heads.clear();
        for (id, k) in sizes {
            let head = self.fresh_head(k);
            self.heads.insert(id, head);
        }
        self.trained_on_count = 0;
    }

    /// Train on `data` under this state's hyperparameters and return the
    /// new state. `FromScratch` restarts from the initial parameters first.
    /// A missing head for `task_id` is created on entry.
    pub fn fit(&self, data: &Dataset, task_id: &str, regime: FitRegime) -> Result<LearnerState> {
        if data.feature_spec() != self.feature_spec {
            return Err(Error::FeatureMismatch(alloc::format!(
                "dataset features {:?} against learner features {:?}",
                data.feature_spec(),
                self.feature_spec
            )));
        }
        if self.kind == LearnerKind::Uniform {
            return Ok(self.clone());
        }
        let mut next = self.clone();
        if regime == FitRegime::FromScratch {
            next.reinitialize();
        }
        next.ensure_head_mut(task_id, data.label_space().num_classes());
        let head_k = next.heads[task_id].num_classes;
        if data.label_space().num_classes() != head_k {
            return Err(Error::LabelSpaceMismatch(alloc::format!(
                "dataset has {} classes but head '{task_id}' has {head_k}",
                data.label_space().num_classes()
            )));
        }
        if data.is_empty() {
            return Ok(next);
        }
        match self.kind {
            LearnerKind::Prior | LearnerKind::NaiveBayes => {
                next.absorb_counts(data.examples(), task_id);
            }
            LearnerKind::LogisticRegression | LearnerKind::Mlp => {
                let mut stream = BatchStream::new(data.len(), data.ordering_seed());
                let batch_size = next.hyper.batch_size as usize;
                let mut batch = Vec::with_capacity(batch_size);
                for _ in 0..next.hyper.iterations {
                    stream.next_batch(batch_size, &mut batch);
                    next.gradient_step(data.examples(), &batch, task_id);
                }
            }
            LearnerKind::Uniform => unreachable!(),
        }
        next.trained_on_count += data.len() as u64;
        Ok(next)
    }

    /// One training update on an explicit batch: a count absorption for the
    /// count learners, a single SGD step for the gradient learners. Used by
    /// curricula that interleave tasks at batch granularity.
    pub(crate) fn absorb_batch(&mut self, examples: &[Example], task_id: &str) -> Result<()> {
        if examples.is_empty() {
            return Ok(());
        }
        if !self.heads.contains_key(task_id) {
            return Err(Error::UnknownHead(task_id.to_string()));
        }
        match self.kind {
            LearnerKind::Uniform => return Ok(()),
            LearnerKind::Prior | LearnerKind::NaiveBayes => {
                self.absorb_counts(examples, task_id);
            }
            LearnerKind::LogisticRegression | LearnerKind::Mlp => {
                let all: Vec<usize> = (0..examples.len()).collect();
                self.gradient_step(examples, &all, task_id);
            }
        }
        self.trained_on_count += examples.len() as u64;
        Ok(())
    }

    fn absorb_counts(&mut self, examples: &[Example], task_id: &str) {
        let vocab = self.feature_spec.input_dim();
        let head = self.heads.get_mut(task_id).expect("head ensured by caller");
        match &mut head.params {
            HeadParams::Counts { label_counts } => {
                for ex in examples {
                    label_counts[ex.label as usize] += 1;
                }
            }
            HeadParams::TokenCounts { label_counts, token_counts } => {
                for ex in examples {
                    let y = ex.label as usize;
                    label_counts[y] += 1;
                    if let FeatureVector::Sparse(entries) = &ex.features {
                        for &(idx, count) in entries {
                            token_counts[y * vocab + idx as usize] += count as u64;
                        }
                    }
                }
            }
            _ => unreachable!("count absorption on a non-count head"),
        }
    }

    fn gradient_step(&mut self, examples: &[Example], batch: &[usize], task_id: &str) {
        match self.kind {
            LearnerKind::LogisticRegression => linear::logistic_step(self, examples, batch, task_id),
            LearnerKind::Mlp => mlp::mlp_step(self, examples, batch, task_id),
            _ => unreachable!("gradient step on a non-gradient learner"),
        }
    }

    /// Predictive distribution for `features` under head `task_id`.
    /// Pure: same (state, features, task) always gives the same numbers.
    pub fn predict(&self, features: &FeatureVector, task_id: &str) -> Result<PredictiveDistribution> {
        features.conforms(&self.feature_spec)?;
        let head = self.head(task_id)?;
        let k = head.num_classes as usize;
        let mut probs = match (&head.params, self.kind) {
            (HeadParams::Unit, _) => vec![1.0 / k as f64; k],
            (HeadParams::Counts { label_counts }, _) => {
                counts::prior_probs(label_counts, self.hyper.smoothing_alpha)
            }
            (HeadParams::TokenCounts { label_counts, token_counts }, _) => counts::naive_bayes_probs(
                label_counts,
                token_counts,
                self.feature_spec.input_dim(),
                features,
                self.hyper.smoothing_alpha,
            ),
            (HeadParams::Linear { weights, bias }, LearnerKind::LogisticRegression) => {
                let logits = linear::logits_from_features(
                    weights,
                    bias,
                    self.feature_spec.input_dim(),
                    features,
                );
                linear::softmax(&logits)
            }
            (HeadParams::Linear { weights, bias }, LearnerKind::Mlp) => {
                let hidden = mlp::hidden_activations(&self.body, self.feature_spec.input_dim(), features);
                let logits = linear::logits_from_dense(weights, bias, &hidden);
                linear::softmax(&logits)
            }
            _ => unreachable!("head variant inconsistent with learner kind"),
        };
        floor_probs(&mut probs);
        Ok(PredictiveDistribution::from_floored(probs))
    }

    /// Code cost in bits of `example.label` under the floored prediction.
    pub fn nll_bits(&self, example: &Example, task_id: &str) -> Result<f64> {
        let dist = self.predict(&example.features, task_id)?;
        if example.label >= dist.num_classes() {
            return Err(Error::LabelOutOfRange {
                index: 0,
                label: example.label,
                num_classes: dist.num_classes(),
            });
        }
        Ok(dist.bits_for(example.label))
    }

    /// Fraction of examples whose argmax prediction matches the label.
    pub fn accuracy(&self, examples: &[Example], task_id: &str) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut hits = 0usize;
        for ex in examples {
            if self.predict(&ex.features, task_id)?.argmax() == ex.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / examples.len() as f64)
    }

    /// Worst relative discrepancy between the analytic training gradient and
    /// a central finite difference with step `epsilon`, over every parameter
    /// reachable from `task_id` (shared body plus that head).
    pub fn gradient_check(&self, example: &Example, task_id: &str, epsilon: f64) -> Result<f64> {
        if !self.kind.is_gradient_trained() {
            return Err(Error::NonDifferentiable(self.kind.name().to_string()));
        }
        let head = self.head(task_id)?;
        if example.label >= head.num_classes {
            return Err(Error::LabelOutOfRange {
                index: 0,
                label: example.label,
                num_classes: head.num_classes,
            });
        }
        let analytic = match self.kind {
            LearnerKind::LogisticRegression => linear::logistic_grad(self, example, task_id),
            LearnerKind::Mlp => mlp::mlp_grad(self, example, task_id),
            _ => unreachable!(),
        };
        let mut params = self.flatten_params(task_id);
        debug_assert_eq!(params.len(), analytic.len());
        let mut worst = 0.0f64;
        for i in 0..params.len() {
            let saved = params[i];
            params[i] = saved + epsilon;
            let up = self.loss_at(&params, example, task_id);
            params[i] = saved - epsilon;
            let down = self.loss_at(&params, example, task_id);
            params[i] = saved;
            let numeric = (up - down) / (2.0 * epsilon);
            let denom = analytic[i].abs().max(numeric.abs()).max(1.0);
            worst = worst.max((analytic[i] - numeric).abs() / denom);
        }
        Ok(worst)
    }

    /// Flattened trainable parameters in a fixed order: body weights, body
    /// biases, head weights, head biases.
    fn flatten_params(&self, task_id: &str) -> Vec<f64> {
        let mut out = Vec::new();
        if let Body::Mlp { w1, b1 } = &self.body {
            out.extend_from_slice(w1);
            out.extend_from_slice(b1);
        }
        if let HeadParams::Linear { weights, bias } = &self.heads[task_id].params {
            out.extend_from_slice(weights);
            out.extend_from_slice(bias);
        }
        out
    }

    fn unflatten_params(&mut self, task_id: &str, params: &[f64]) {
        let mut pos = 0usize;
        let mut copy_into = |dst: &mut [f64]| {
            let n = dst.len();
            dst.copy_from_slice(&params[pos..pos + n]);
            pos += n;
        };
        if let Body::Mlp { w1, b1 } = &mut self.body {
            copy_into(w1);
            copy_into(b1);
        }
        let head = self.heads.get_mut(task_id).expect("head checked by caller");
        if let HeadParams::Linear { weights, bias } = &mut head.params {
            copy_into(weights);
            copy_into(bias);
        }
        debug_assert_eq!(pos, params.len());
    }

    /// Training loss (natural-log cross-entropy plus the l2 penalty on
    /// weight matrices) at the given flattened parameters.
    fn loss_at(&self, params: &[f64], example: &Example, task_id: &str) -> f64 {
        let mut probe = self.clone();
        probe.unflatten_params(task_id, params);
        probe.training_loss(example, task_id)
    }

    /// The scalar the gradient learners descend: −ln p(y|x) from the raw
    /// (unfloored) softmax, plus 0.5·l2·‖weights‖² over weight matrices.
    pub(crate) fn training_loss(&self, example: &Example, task_id: &str) -> f64 {
        let head = &self.heads[task_id];
        let (weights, bias) = match &head.params {
            HeadParams::Linear { weights, bias } => (weights, bias),
            _ => unreachable!("training loss on a non-gradient learner"),
        };
        let logits = match self.kind {
            LearnerKind::LogisticRegression => linear::logits_from_features(
                weights,
                bias,
                self.feature_spec.input_dim(),
                &example.features,
            ),
            LearnerKind::Mlp => {
                let hidden =
                    mlp::hidden_activations(&self.body, self.feature_spec.input_dim(), &example.features);
                linear::logits_from_dense(weights, bias, &hidden)
            }
            _ => unreachable!(),
        };
        let mut loss = -linear::log_softmax_at(&logits, example.label as usize);
        let mut squared = 0.0;
        if let Body::Mlp { w1, .. } = &self.body {
            squared += w1.iter().map(|w| w * w).sum::<f64>();
        }
        squared += weights.iter().map(|w| w * w).sum::<f64>();
        loss += 0.5 * self.hyper.l2 * squared;
        loss
    }

    /// Canonical byte encoding; equal states produce equal bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        serial::encode(self)
    }

    /// Inverse of `to_bytes`; rejects malformed or truncated input.
    pub fn from_bytes(bytes: &[u8]) -> Result<LearnerState> {
        serial::decode(bytes)
    }
}

/// Deterministic mini-batch order: a fresh permutation of the example
/// indices per epoch, seeded by (ordering_seed, epoch).
pub(crate) struct BatchStream {
    n: usize,
    ordering_seed: u64,
    epoch: u64,
    pos: usize,
    order: Vec<usize>,
}

impl BatchStream {
    pub(crate) fn new(n: usize, ordering_seed: u64) -> Self {
        assert!(n > 0, "batch stream over an empty dataset");
        let mut stream = BatchStream { n, ordering_seed, epoch: 0, pos: 0, order: (0..n).collect() };
        stream.shuffle_epoch();
        stream
    }

    fn shuffle_epoch(&mut self) {
        let mut rng = rng::seeded(rng::derive(self.ordering_seed, self.epoch));
        self.order.shuffle(&mut rng);
    }

    /// Fill `out` with the next batch of at most `size` indices. Batches
    /// never straddle an epoch boundary, so the final batch of an epoch may
    /// be short.
    pub(crate) fn next_batch(&mut self, size: usize, out: &mut Vec<usize>) {
        if self.pos >= self.n {
            self.epoch += 1;
            self.pos = 0;
            self.shuffle_epoch();
        }
        let take = size.min(self.n - self.pos);
        out.clear();
        out.extend_from_slice(&self.order[self.pos..self.pos + take]);
        self.pos += take;
    }
}

/// Apply one fn to each (index, value) pair of a feature vector; sparse
/// counts are presented as f64 values.
pub(crate) fn for_each_feature(features: &FeatureVector, mut f: impl FnMut(usize, f64)) {
    match features {
        FeatureVector::Dense(v) => {
            for (j, &x) in v.iter().enumerate() {
                f(j, x);
            }
        }
        FeatureVector::Sparse(entries) => {
            for &(idx, count) in entries {
                f(idx as usize, count as f64);
            }
        }
    }
}
