//! The blockwise protocol loop shared by report generation and the label
//! coder. A `ProtocolRun` owns one model per candidate hyperparameter
//! setting and advances them block by block as labels become available, so
//! an encoder (which has all labels) and a decoder (which learns them one
//! block at a time) can drive the identical state machine.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use crate::data::{Dataset, Example, FeatureSpec, LabelSpace};
use crate::error::{Error, Result};
use crate::learner::{FitRegime, HyperParams, LearnerKind, LearnerState};
use crate::stats::KahanSum;

use super::EvaluationProtocol;

/// Lowest index of the minimal value; ties go to the earlier entry.
pub(crate) fn argmin(xs: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// One candidate-per-hyperparameter model bank stepping through a block
/// plan. Blocks are completed in order; completing a block means scoring
/// every candidate on it (blocks after the first) and then training through
/// its end under the protocol regime.
pub(crate) struct ProtocolRun<'p> {
    protocol: &'p EvaluationProtocol,
    head: String,
    label_space: LabelSpace,
    feature_spec: FeatureSpec,
    ordering_seed: u64,
    /// Reset points for the from-scratch regime, one per candidate.
    bases: Vec<LearnerState>,
    models: Vec<LearnerState>,
    trained_upto: usize,
    /// Per-candidate bits on the most recently completed block (None until
    /// block 2 completes; block 1 is never scored because nothing trained
    /// could have coded it).
    last_block_bits: Option<Vec<f64>>,
    next_block: usize,
}

impl<'p> ProtocolRun<'p> {
    /// `base` carries pretrained parameters to continue from; `None` means
    /// every candidate starts from its own seeded initialization.
    pub(crate) fn new(
        base: Option<&LearnerState>,
        kind: LearnerKind,
        label_space: LabelSpace,
        feature_spec: FeatureSpec,
        ordering_seed: u64,
        protocol: &'p EvaluationProtocol,
        head: &str,
    ) -> Result<Self> {
        protocol.validate()?;
        if let Some(b) = base {
            if b.kind() != kind {
                return Err(Error::IncompatibleLearner(alloc::format!(
                    "base state is {} but the run asks for {}",
                    b.kind().name(),
                    kind.name()
                )));
            }
        }
        let mut bases = Vec::with_capacity(protocol.candidate_hypers.len());
        for cand in &protocol.candidate_hypers {
            let mut state = candidate_base(base, kind, label_space, feature_spec, cand)?;
            if !state.has_head(head) {
                state = state.add_head(head, label_space)?;
            }
            bases.push(state);
        }
        let models = bases.clone();
        Ok(ProtocolRun {
            protocol,
            head: head.to_string(),
            label_space,
            feature_spec,
            ordering_seed,
            bases,
            models,
            trained_upto: 0,
            last_block_bits: None,
            next_block: 1,
        })
    }

    pub(crate) fn default_index(&self) -> usize {
        self.protocol
            .candidate_hypers
            .iter()
            .position(|c| *c == self.protocol.default_hyper)
            .expect("validated: default is among the candidates")
    }

    pub(crate) fn head(&self) -> &str {
        &self.head
    }

    /// Candidate whose model codes the current block: none for block 1
    /// (uniform code), the default for block 2, and afterwards the candidate
    /// with the fewest bits on the previous block.
    pub(crate) fn coding_choice(&self) -> Option<usize> {
        match self.next_block {
            1 => None,
            2 => Some(self.default_index()),
            _ => {
                let bits = self
                    .last_block_bits
                    .as_ref()
                    .expect("blocks complete in order, so block i-1 was scored");
                Some(argmin(bits))
            }
        }
    }

    pub(crate) fn model(&self, candidate: usize) -> &LearnerState {
        &self.models[candidate]
    }

    fn slice_dataset(&self, examples: &[Example], range: Range<usize>) -> Result<Dataset> {
        Dataset::new(
            examples[range].to_vec(),
            self.label_space,
            self.feature_spec,
            String::from("protocol-slice"),
            self.ordering_seed,
        )
    }

    /// The labels of the current block are now known. Scores every candidate
    /// on it (blocks ≥ 2), then trains all candidates through its end.
    /// Returns the per-candidate bits on the block (empty for block 1).
    pub(crate) fn complete_block(
        &mut self,
        examples: &[Example],
        range: Range<usize>,
    ) -> Result<Vec<f64>> {
        if range.start != self.trained_upto || range.end <= range.start || range.end > examples.len()
        {
            return Err(Error::InvalidPlan(alloc::format!(
                "block {}..{} does not continue prefix {}",
                range.start,
                range.end,
                self.trained_upto
            )));
        }
        let scores = if self.next_block >= 2 {
            let mut out = Vec::with_capacity(self.models.len());
            for model in &self.models {
                let mut bits = KahanSum::new();
                for ex in &examples[range.clone()] {
                    bits.add(model.nll_bits(ex, &self.head)?);
                }
                out.push(bits.value());
            }
            out
        } else {
            Vec::new()
        };

        match self.protocol.regime {
            FitRegime::WarmStart => {
                let delta = self.slice_dataset(examples, self.trained_upto..range.end)?;
                for model in &mut self.models {
                    *model = model.fit(&delta, &self.head, FitRegime::WarmStart)?;
                }
            }
            FitRegime::FromScratch => {
                let prefix = self.slice_dataset(examples, 0..range.end)?;
                for (model, base) in self.models.iter_mut().zip(&self.bases) {
                    *model = base.fit(&prefix, &self.head, FitRegime::WarmStart)?;
                }
            }
        }
        self.trained_upto = range.end;
        self.next_block += 1;
        if !scores.is_empty() {
            self.last_block_bits = Some(scores.clone());
        }
        Ok(scores)
    }
}

/// Starting state for one candidate: the pretrained base re-hyperd when
/// shapes allow, otherwise (or without a base) a fresh seeded init carrying
/// the same set of heads.
fn candidate_base(
    base: Option<&LearnerState>,
    kind: LearnerKind,
    label_space: LabelSpace,
    feature_spec: FeatureSpec,
    candidate: &HyperParams,
) -> Result<LearnerState> {
    if let Some(b) = base {
        let reshapes_body =
            kind == LearnerKind::Mlp && candidate.hidden_width != b.hyper().hidden_width;
        if !reshapes_body {
            return b.with_hyper(candidate.clone());
        }
        let mut fresh = LearnerState::init(kind, label_space, feature_spec, candidate.clone())?;
        for id in b.head_ids() {
            let k = b.head_num_classes(id).expect("iterating existing heads");
            if !fresh.has_head(id) {
                fresh = fresh.add_head(id, LabelSpace::new(k)?)?;
            }
        }
        return Ok(fresh);
    }
    LearnerState::init(kind, label_space, feature_spec, candidate.clone())
}
