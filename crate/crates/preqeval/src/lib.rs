//! Filesystem and orchestration layer over `preqeval-core`: JSONL datasets,
//! TOML experiment configs, the digest-addressed run directory, CSV curve
//! emission, and byte-level determinism verification. All measurement logic
//! stays in the core crate; this one only moves bytes and schedules seeds.

use std::fmt;
use std::path::Path;

pub mod config;
pub mod csv_out;
pub mod jsonl;
pub mod runner;

pub use config::{config_digest, parse_config, ExperimentConfig, ExperimentKind};
pub use jsonl::{load_jsonl, save_jsonl};
pub use runner::{
    emit_curves, load_run, resolve_out_dir, run, verify, RunOutcome, RunRecord, SeedOutcome,
};

/// Everything that can go wrong on this side of the core boundary, keyed by
/// which process exit code it maps to.
#[derive(Debug)]
pub enum AppError {
    /// Invalid configuration; carries every violation found, not just the
    /// first. Exit code 1.
    Config(Vec<String>),
    /// Measurement-layer failure. Exit code 2.
    Core(preqeval_core::Error),
    /// Filesystem failure, annotated with the path. Exit code 2.
    Io(String),
    /// Malformed data file (JSONL, bitstream, stored artifacts). Exit code 2.
    Data(String),
    /// `verify` was asked about a config that has never completed. Exit code 2.
    NoRun(String),
    /// The headline failure `verify` exists to catch. Exit code 3.
    Determinism(String),
}

pub type AppResult<T> = std::result::Result<T, AppError>;

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 1,
            AppError::Determinism(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> AppError {
        AppError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(violations) => {
                writeln!(f, "invalid config ({} problem(s)):", violations.len())?;
                for v in violations {
                    writeln!(f, "  - {v}")?;
                }
                Ok(())
            }
            AppError::Core(e) => write!(f, "{e}"),
            AppError::Io(msg) | AppError::Data(msg) | AppError::NoRun(msg) => write!(f, "{msg}"),
            AppError::Determinism(msg) => write!(f, "determinism violation: {msg}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<preqeval_core::Error> for AppError {
    fn from(e: preqeval_core::Error) -> Self {
        AppError::Core(e)
    }
}
