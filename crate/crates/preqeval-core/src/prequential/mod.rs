//! Online (prequential) codelength: transmit labels one block at a time,
//! always predicting with a model trained only on the labels already sent.
//! The total is both a compression length and a learning-speed score — a
//! learner that adapts quickly spends fewer bits early.

pub(crate) mod engine;

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use serde::{Deserialize, Serialize};

use crate::data::{digest_hex, Dataset};
use crate::error::{Error, Result};
use crate::learner::{
    FitRegime, HyperParams, LearnerKind, LearnerState, PredictiveDistribution,
};
use crate::stats::KahanSum;

use engine::ProtocolRun;

/// Cumulative block boundaries b_1 < b_2 < … < b_M = N; block i covers
/// examples (b_{i−1}, b_i] in transmission order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockPlan {
    boundaries: Vec<usize>,
}

impl BlockPlan {
    pub fn from_boundaries(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::InvalidPlan(String::from("no block boundaries")));
        }
        if boundaries[0] == 0 {
            return Err(Error::InvalidPlan(String::from("first boundary must be positive")));
        }
        for pair in boundaries.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidPlan(alloc::format!(
                    "boundaries must increase strictly, got {} then {}",
                    pair[0],
                    pair[1]
                )));
            }
        }
        Ok(BlockPlan { boundaries })
    }

    /// One block per example: boundaries 1, 2, …, n.
    pub fn per_example(n: usize) -> Result<Self> {
        Self::from_boundaries((1..=n).collect())
    }

    /// Blocks of `block_size` examples, the last one possibly shorter.
    pub fn uniform_blocks(n: usize, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidPlan(String::from("block size must be positive")));
        }
        let mut boundaries: Vec<usize> = (1..=n / block_size).map(|i| i * block_size).collect();
        if boundaries.last() != Some(&n) {
            boundaries.push(n);
        }
        Self::from_boundaries(boundaries)
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn num_blocks(&self) -> usize {
        self.boundaries.len()
    }

    /// Total number of examples covered, b_M.
    pub fn total_examples(&self) -> usize {
        *self.boundaries.last().expect("validated non-empty")
    }

    /// Example range of 1-based block `i`.
    pub fn block_range(&self, i: usize) -> Range<usize> {
        let start = if i == 1 { 0 } else { self.boundaries[i - 2] };
        start..self.boundaries[i - 1]
    }

    pub fn matches(&self, data: &Dataset) -> Result<()> {
        if self.total_examples() != data.len() {
            return Err(Error::InvalidPlan(alloc::format!(
                "plan covers {} examples but dataset has {}",
                self.total_examples(),
                data.len()
            )));
        }
        Ok(())
    }
}

/// How the labels are coded: one model update per example, or blockwise
/// with hyperparameter carryover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    PerExample,
    Blockwise,
}

/// Code for the first block, before any model has trained. Uniform coding
/// is the only sound choice — an untrained model's predictions are noise —
/// and the protocol pins it explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstBlockCode {
    Uniform,
}

/// Everything both ends of the channel must agree on before the first bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationProtocol {
    pub mode: EvalMode,
    pub regime: FitRegime,
    pub default_hyper: HyperParams,
    pub candidate_hypers: Vec<HyperParams>,
    pub first_block_code: FirstBlockCode,
}

impl EvaluationProtocol {
    /// Single-candidate protocol: no hyperparameter search.
    pub fn single(mode: EvalMode, regime: FitRegime, hyper: HyperParams) -> Self {
        EvaluationProtocol {
            mode,
            regime,
            default_hyper: hyper.clone(),
            candidate_hypers: vec![hyper],
            first_block_code: FirstBlockCode::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidate_hypers.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if !self.candidate_hypers.contains(&self.default_hyper) {
            return Err(Error::InvalidProtocol(String::from(
                "default hyperparameters must be among the candidates",
            )));
        }
        Ok(())
    }
}

/// One coded block: position, cost, and what coded it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRecord {
    /// 1-based block index.
    pub index: usize,
    /// Examples in this block.
    pub examples: usize,
    /// Cumulative examples through this block (its end boundary).
    pub end: usize,
    pub bits: f64,
    /// Argmax accuracy of the coding model on this block (uniform coding
    /// predicts label 0 under the lowest-index tie rule).
    pub accuracy: f64,
    /// Candidate index whose hyperparameters trained the coding model;
    /// None for the uniform-coded first block.
    pub hyper_index: Option<usize>,
    /// For switching runs: which input model coded this block.
    pub model: Option<usize>,
}

/// Full account of one codelength measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodelengthReport {
    pub learner: String,
    pub dataset_id: String,
    pub dataset_digest: String,
    pub examples: usize,
    pub num_classes: u32,
    pub protocol: EvaluationProtocol,
    pub blocks: Vec<BlockRecord>,
    pub total_bits: f64,
}

impl CodelengthReport {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Reconstruct the block plan this report was produced under.
    pub fn plan(&self) -> Result<BlockPlan> {
        BlockPlan::from_boundaries(self.blocks.iter().map(|b| b.end).collect())
    }
}

/// A metric sampled along training, for learning curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricPoint {
    pub examples_seen: u64,
    pub metric: String,
    pub value: f64,
    pub task: String,
    pub seed: u64,
}

/// Points plus any warnings raised while producing them. Within one
/// (task, seed, metric) series, examples_seen never decreases.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MetricSeries {
    pub points: Vec<MetricPoint>,
    pub warnings: Vec<String>,
}

impl MetricSeries {
    pub fn push(&mut self, point: MetricPoint) {
        let monotone = self
            .points
            .iter()
            .rev()
            .find(|p| p.task == point.task && p.seed == point.seed && p.metric == point.metric)
            .map(|p| p.examples_seen <= point.examples_seen)
            .unwrap_or(true);
        assert!(monotone, "examples_seen must not decrease within a series");
        self.points.push(point);
    }

    pub fn extend(&mut self, other: MetricSeries) {
        for p in other.points {
            self.push(p);
        }
        self.warnings.extend(other.warnings);
    }
}

/// Code every label with a model trained on all earlier examples: the first
/// example costs log₂K, example i > 1 costs −log₂ p(y_i | x_i) under a model
/// trained on examples 1..i−1. Warm start continues one model; from-scratch
/// retrains on each prefix.
pub fn exact_online_codelength(
    kind: LearnerKind,
    hyper: &HyperParams,
    data: &Dataset,
    regime: FitRegime,
) -> Result<CodelengthReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let head = data.task_id().to_string();
    let mut base =
        LearnerState::init(kind, data.label_space(), data.feature_spec(), hyper.clone())?;
    if !base.has_head(&head) {
        base = base.add_head(&head, data.label_space())?;
    }
    let k_bits = data.label_space().uniform_bits();
    let examples = data.examples();

    let mut blocks = Vec::with_capacity(data.len());
    let mut total = KahanSum::new();
    blocks.push(BlockRecord {
        index: 1,
        examples: 1,
        end: 1,
        bits: k_bits,
        accuracy: f64::from(examples[0].label == 0),
        hyper_index: None,
        model: None,
    });
    total.add(k_bits);

    let mut warm_state = base.clone();
    for i in 2..=data.len() {
        let state = match regime {
            FitRegime::WarmStart => {
                warm_state = warm_state.fit(&data.slice(i - 2..i - 1), &head, FitRegime::WarmStart)?;
                &warm_state
            }
            FitRegime::FromScratch => {
                warm_state = base.fit(&data.slice(0..i - 1), &head, FitRegime::WarmStart)?;
                &warm_state
            }
        };
        let ex = &examples[i - 1];
        let dist = state.predict(&ex.features, &head)?;
        let bits = dist.bits_for(ex.label);
        blocks.push(BlockRecord {
            index: i,
            examples: 1,
            end: i,
            bits,
            accuracy: f64::from(dist.argmax() == ex.label),
            hyper_index: Some(0),
            model: None,
        });
        total.add(bits);
    }

    Ok(CodelengthReport {
        learner: kind.name().to_string(),
        dataset_id: data.task_id().to_string(),
        dataset_digest: digest_hex(&data.content_digest()),
        examples: data.len(),
        num_classes: data.label_space().num_classes(),
        protocol: EvaluationProtocol::single(EvalMode::PerExample, regime, hyper.clone()),
        blocks,
        total_bits: total.value(),
    })
}

/// Bits for the block about to be coded (None = uniform first block).
pub(crate) enum FirstBlockBits {
    Uniform,
    /// Code block 1 with the base model's predictions instead of the uniform
    /// code — only meaningful when the run starts from a pretrained state
    /// that already owns the target head.
    ByPredictions,
}

/// Receives every coding distribution together with the label it must code;
/// the label coder listens here.
pub(crate) type DistributionSink<'a> = &'a mut dyn FnMut(&PredictiveDistribution, u32);

/// Blockwise codelength under a carryover protocol, optionally starting
/// from a pretrained base state and streaming every coding distribution to
/// `sink`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_blockwise(
    base: Option<&LearnerState>,
    kind: LearnerKind,
    protocol: &EvaluationProtocol,
    data: &Dataset,
    plan: &BlockPlan,
    head: &str,
    first_block: FirstBlockBits,
    mut sink: Option<DistributionSink<'_>>,
) -> Result<CodelengthReport> {
    plan.matches(data)?;
    let mut run = ProtocolRun::new(
        base,
        kind,
        data.label_space(),
        data.feature_spec(),
        data.ordering_seed(),
        protocol,
        head,
    )?;
    let k = data.label_space().num_classes() as usize;
    let uniform = PredictiveDistribution::uniform(k as u32);
    let examples = data.examples();

    let mut blocks = Vec::with_capacity(plan.num_blocks());
    let mut total = KahanSum::new();
    for i in 1..=plan.num_blocks() {
        let range = plan.block_range(i);
        let choice = run.coding_choice();

        // Coding pass: accuracy, the coder sink, and (for a predicted first
        // block) the bits themselves.
        let mut hits = 0usize;
        let mut first_block_bits = KahanSum::new();
        let coding_model = match (i, &first_block) {
            (1, FirstBlockBits::Uniform) => None,
            (1, FirstBlockBits::ByPredictions) => Some(run.model(run.default_index())),
            _ => Some(run.model(choice.expect("blocks after the first have a choice"))),
        };
        for ex in &examples[range.clone()] {
            let dist = match coding_model {
                Some(model) => model.predict(&ex.features, run.head())?,
                None => uniform.clone(),
            };
            if dist.argmax() == ex.label {
                hits += 1;
            }
            if i == 1 && matches!(first_block, FirstBlockBits::ByPredictions) {
                first_block_bits.add(dist.bits_for(ex.label));
            }
            if let Some(sink) = sink.as_deref_mut() {
                sink(&dist, ex.label);
            }
        }

        let candidate_bits = run.complete_block(examples, range.clone())?;
        let bits = match (i, &first_block) {
            (1, FirstBlockBits::Uniform) => range.len() as f64 * data.label_space().uniform_bits(),
            (1, FirstBlockBits::ByPredictions) => first_block_bits.value(),
            _ => candidate_bits[choice.expect("blocks after the first have a choice")],
        };
        blocks.push(BlockRecord {
            index: i,
            examples: range.len(),
            end: range.end,
            bits,
            accuracy: hits as f64 / range.len() as f64,
            hyper_index: choice,
            model: None,
        });
        total.add(bits);
    }

    Ok(CodelengthReport {
        learner: kind.name().to_string(),
        dataset_id: data.task_id().to_string(),
        dataset_digest: digest_hex(&data.content_digest()),
        examples: data.len(),
        num_classes: data.label_space().num_classes(),
        protocol: protocol.clone(),
        blocks,
        total_bits: total.value(),
    })
}

/// Blockwise codelength: block 1 is coded uniformly, block 2 with the
/// default hyperparameters, and every later block with the candidate that
/// compressed the previous block best (selection never peeks forward).
pub fn blockwise_codelength(
    kind: LearnerKind,
    protocol: &EvaluationProtocol,
    data: &Dataset,
    plan: &BlockPlan,
) -> Result<CodelengthReport> {
    run_blockwise(
        None,
        kind,
        protocol,
        data,
        plan,
        data.task_id(),
        FirstBlockBits::Uniform,
        None,
    )
}

/// The carryover rule as a standalone function: with no completed trained
/// block yet, the default wins; otherwise the candidate with the fewest
/// bits on the last completed block, ties to the earlier candidate.
pub fn hyperparameter_carryover<'a>(
    protocol: &'a EvaluationProtocol,
    last_block_bits: Option<&[f64]>,
) -> Result<&'a HyperParams> {
    protocol.validate()?;
    match last_block_bits {
        None => Ok(&protocol.default_hyper),
        Some(bits) => {
            if bits.len() != protocol.candidate_hypers.len() {
                return Err(Error::MismatchedReports(alloc::format!(
                    "{} bit entries for {} candidates",
                    bits.len(),
                    protocol.candidate_hypers.len()
                )));
            }
            Ok(&protocol.candidate_hypers[engine::argmin(bits)])
        }
    }
}

/// Whether switching between models charges the log₂(num_models) bits per
/// block needed to tell the decoder which model to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityCost {
    On,
    Off,
}

/// Combine per-model reports over one plan by letting each block be coded
/// by whichever model compressed it best. With identity cost on, every
/// block after the first also pays log₂(num_models) to name its model.
pub fn switching_codelength(
    reports: &[CodelengthReport],
    identity_cost: IdentityCost,
) -> Result<CodelengthReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::MismatchedReports(String::from("no reports to switch over")))?;
    for r in &reports[1..] {
        let same_blocks = r.blocks.len() == first.blocks.len()
            && r
                .blocks
                .iter()
                .zip(&first.blocks)
                .all(|(a, b)| a.end == b.end && a.examples == b.examples);
        if !same_blocks {
            return Err(Error::MismatchedReports(String::from(
                "reports use different block plans",
            )));
        }
        if r.dataset_digest != first.dataset_digest {
            return Err(Error::MismatchedReports(String::from(
                "reports describe different datasets",
            )));
        }
    }

    let identity_bits = libm::log2(reports.len() as f64);
    let mut blocks = Vec::with_capacity(first.blocks.len());
    let mut total = KahanSum::new();
    for b in 0..first.blocks.len() {
        let winner = engine::argmin(
            &reports.iter().map(|r| r.blocks[b].bits).collect::<Vec<f64>>(),
        );
        let won = &reports[winner].blocks[b];
        let mut bits = won.bits;
        if identity_cost == IdentityCost::On && b > 0 {
            bits += identity_bits;
        }
        blocks.push(BlockRecord { model: Some(winner), bits, ..won.clone() });
        total.add(bits);
    }

    let mut label = String::from("switch(");
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            label.push(',');
        }
        label.push_str(&r.learner);
    }
    label.push(')');

    Ok(CodelengthReport {
        learner: label,
        dataset_id: first.dataset_id.clone(),
        dataset_digest: first.dataset_digest.clone(),
        examples: first.examples,
        num_classes: first.num_classes,
        protocol: first.protocol.clone(),
        blocks,
        total_bits: total.value(),
    })
}

/// Accuracy on a held-out set as training consumes ever larger prefixes of
/// `train`, including the zero-shot point before any training. Overlapping
/// train/eval examples are reported as a warning, not an error.
pub fn learning_curve(
    kind: LearnerKind,
    hyper: &HyperParams,
    train: &Dataset,
    eval: &Dataset,
    plan: &BlockPlan,
    regime: FitRegime,
) -> Result<MetricSeries> {
    plan.matches(train)?;
    if eval.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if eval.label_space() != train.label_space() {
        return Err(Error::LabelSpaceMismatch(String::from(
            "train and eval label spaces differ",
        )));
    }
    let mut series = MetricSeries::default();
    let train_hashes: alloc::collections::BTreeSet<[u8; 32]> =
        train.examples().iter().map(|e| e.content_hash()).collect();
    let shared = eval
        .examples()
        .iter()
        .filter(|e| train_hashes.contains(&e.content_hash()))
        .count();
    if shared > 0 {
        series.warnings.push(alloc::format!(
            "{shared} evaluation examples also appear in the training data"
        ));
    }

    let head = train.task_id().to_string();
    let mut base =
        LearnerState::init(kind, train.label_space(), train.feature_spec(), hyper.clone())?;
    if !base.has_head(&head) {
        base = base.add_head(&head, train.label_space())?;
    }
    let task = train.task_id().to_string();
    let seed = train.ordering_seed();
    let record = |series: &mut MetricSeries, seen: usize, value: f64| {
        series.push(MetricPoint {
            examples_seen: seen as u64,
            metric: String::from("accuracy"),
            value,
            task: task.clone(),
            seed,
        });
    };

    record(&mut series, 0, base.accuracy(eval.examples(), &head)?);
    let mut warm = base.clone();
    let mut prev = 0usize;
    for &b in plan.boundaries() {
        let state = match regime {
            FitRegime::WarmStart => {
                warm = warm.fit(&train.slice(prev..b), &head, FitRegime::WarmStart)?;
                &warm
            }
            FitRegime::FromScratch => {
                warm = base.fit(&train.slice(0..b), &head, FitRegime::WarmStart)?;
                &warm
            }
        };
        record(&mut series, b, state.accuracy(eval.examples(), &head)?);
        prev = b;
    }
    Ok(series)
}
