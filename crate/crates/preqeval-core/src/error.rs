//! Error type shared by the whole crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// All the ways an operation can be refused or a decode can fail.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Label space must have at least two classes.
    LabelSpaceTooSmall { num_classes: u32 },
    /// Hyperparameters are invalid for the requested learner kind.
    InvalidHyper(String),
    /// Learner kind cannot be combined with the given feature spec or operation.
    IncompatibleLearner(String),
    /// Feature vector does not conform to the declared feature spec.
    FeatureMismatch(String),
    /// Example label is outside the label space.
    LabelOutOfRange { index: usize, label: u32, num_classes: u32 },
    /// Operation requires a non-empty dataset.
    EmptyDataset,
    /// Predict or fit addressed a head that does not exist.
    UnknownHead(String),
    /// add_head called with an id that is already present.
    DuplicateHead(String),
    /// Gradient check requested on a learner without parameters.
    NonDifferentiable(String),
    /// Serialized learner state could not be decoded.
    MalformedState(String),
    /// Block plan is inconsistent with the dataset it is applied to.
    InvalidPlan(String),
    /// Evaluation protocol is self-inconsistent.
    InvalidProtocol(String),
    /// Carryover selection needs at least one candidate.
    EmptyCandidates,
    /// Switching requires reports over the same plan and dataset.
    MismatchedReports(String),
    /// Coder precision outside the supported range.
    InvalidPrecision(u8),
    /// Bitstream header or payload is structurally invalid.
    MalformedStream(String),
    /// Bitstream digests do not match the supplied learner/protocol.
    DigestMismatch(String),
    /// Decoded labels fail the stream checksum.
    CorruptPayload,
    /// Task spec parameters are invalid.
    InvalidTaskSpec(String),
    /// Shift cannot be applied to this generator kind.
    IncompatibleShift(String),
    /// Split parameters are invalid for this dataset.
    InvalidSplit(String),
    /// Schedule references a task that was not supplied.
    UnknownTask(String),
    /// Curriculum/schedule parameters are invalid.
    InvalidSchedule(String),
    /// Tasks must share a label-space size for cross-variant scoring.
    LabelSpaceMismatch(String),
    /// Metric series holds no points for the requested task.
    EmptySeries(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::LabelSpaceTooSmall { num_classes } => {
                write!(f, "label space needs at least 2 classes, got {num_classes}")
            }
            Error::InvalidHyper(msg) => write!(f, "invalid hyperparameters: {msg}"),
            Error::IncompatibleLearner(msg) => write!(f, "incompatible learner: {msg}"),
            Error::FeatureMismatch(msg) => write!(f, "feature mismatch: {msg}"),
            Error::LabelOutOfRange { index, label, num_classes } => write!(
                f,
                "example {index}: label {label} outside label space of {num_classes} classes"
            ),
            Error::EmptyDataset => write!(f, "dataset is empty"),
            Error::UnknownHead(id) => write!(f, "no head for task '{id}'"),
            Error::DuplicateHead(id) => write!(f, "head for task '{id}' already exists"),
            Error::NonDifferentiable(kind) => {
                write!(f, "gradient check unsupported for learner kind '{kind}'")
            }
            Error::MalformedState(msg) => write!(f, "malformed learner state: {msg}"),
            Error::InvalidPlan(msg) => write!(f, "invalid block plan: {msg}"),
            Error::InvalidProtocol(msg) => write!(f, "invalid protocol: {msg}"),
            Error::EmptyCandidates => write!(f, "candidate hyperparameter list is empty"),
            Error::MismatchedReports(msg) => write!(f, "mismatched reports: {msg}"),
            Error::InvalidPrecision(b) => {
                write!(f, "coder precision {b} outside supported range 8..=30")
            }
            Error::MalformedStream(msg) => write!(f, "malformed bitstream: {msg}"),
            Error::DigestMismatch(which) => write!(f, "bitstream digest mismatch: {which}"),
            Error::CorruptPayload => write!(f, "payload checksum mismatch after decode"),
            Error::InvalidTaskSpec(msg) => write!(f, "invalid task spec: {msg}"),
            Error::IncompatibleShift(msg) => write!(f, "incompatible shift: {msg}"),
            Error::InvalidSplit(msg) => write!(f, "invalid split: {msg}"),
            Error::UnknownTask(id) => write!(f, "schedule references unknown task '{id}'"),
            Error::InvalidSchedule(msg) => write!(f, "invalid schedule: {msg}"),
            Error::LabelSpaceMismatch(msg) => write!(f, "label space mismatch: {msg}"),
            Error::EmptySeries(task) => write!(f, "no series points for task '{task}'"),
        }
    }
}

impl core::error::Error for Error {}
