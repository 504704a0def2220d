//! Measures how quickly probabilistic learners adapt to a task by the number
//! of bits needed to transmit its labels online, and backs that number with a
//! decodable arithmetic-coded bitstream.
//!
//! The crate is `no_std` + `alloc`: everything here is deterministic
//! computation over in-memory values. File formats, configuration, and the
//! command-line driver live in the companion `preqeval` crate.
//!
//! Main pieces:
//!
//! - [`learner`]: small probabilistic learners (uniform, Laplace class prior,
//!   multinomial naive Bayes, multinomial logistic regression, one-hidden-layer
//!   MLP) with a shared body and per-task heads, deterministic training, and a
//!   canonical byte serialization.
//! - [`prequential`]: exact per-example and blockwise online codelength,
//!   hyperparameter carryover between blocks, model switching, and learning
//!   curves.
//! - [`coder`]: an integer arithmetic coder that turns the codelength story
//!   into a real bitstream an independent decoder can invert.
//! - [`tasks`]: deterministic synthetic task generators (Gaussian blobs,
//!   bag-of-words topics) with distribution-shift variants.
//! - [`curriculum`]: sequential and random-uniform training schedules,
//!   forgetting measurement, zero-shot and cross-variant evaluation, and
//!   pretrain-then-finetune codelength comparison.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod coder;
pub mod curriculum;
pub mod data;
pub mod error;
pub mod learner;
pub mod prequential;
pub mod rng;
pub mod stats;
pub mod tasks;

pub use coder::{
    decode_labels, encode_labels, measured_vs_theoretical, quantize, Bitstream, CoderStats,
    CodingComparison, EncodeOutput, QuantizedDistribution, DEFAULT_PRECISION,
};
pub use curriculum::{
    cross_variant_matrix, forgetting_metric, pretrain_then_finetune, run_random_uniform,
    run_sequential, zero_shot_eval, CodelengthPair, CurriculumSchedule, ForgettingRecord,
    SequentialPhase, TaskData, TransferReport,
};
pub use data::{Dataset, Example, FeatureSpec, FeatureVector, LabelSpace};
pub use error::{Error, Result};
pub use learner::{
    FitRegime, HyperParams, LearnerKind, LearnerState, PredictiveDistribution, DEFAULT_HEAD,
    EPSILON_FLOOR,
};
pub use prequential::{
    blockwise_codelength, exact_online_codelength, hyperparameter_carryover, learning_curve,
    switching_codelength, BlockPlan, BlockRecord, CodelengthReport, EvalMode, EvaluationProtocol,
    FirstBlockCode, IdentityCost, MetricPoint, MetricSeries,
};
pub use tasks::{
    apply_shift, generate, split, GeneratorParams, Shift, TaskFamily, TaskSpec,
};
