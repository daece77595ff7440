//! Soft-margin kernel SVMs.
//!
//! Binary machines are trained with sequential minimal optimization on a
//! precomputed kernel matrix. Multi-class models combine one binary machine
//! per class pair and predict by majority vote.

mod grid;
mod kernel;
mod model_io;
mod multiclass;
mod smo;

pub use grid::{grid_search_cv, stratified_folds, GridConfig, GridPoint, GridResult};
pub use kernel::{kernel_eval, squared_distance, KernelMatrix, KernelSpec};
pub use model_io::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use multiclass::{predict, resolve_votes, train_multiclass, MulticlassModel, PairModel};
pub use smo::{decision_value, train_binary, BinaryModel, SmoParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training data holds a single class")]
    SingleClass,
    #[error("no convergence after {passes} passes")]
    NoConvergence {
        passes: usize,
        /// Best model reached before giving up.
        model: Box<BinaryModel>,
    },
    #[error("invalid SVM parameters: {0}")]
    InvalidParams(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("model format version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("model file checksum mismatch (truncated or corrupted)")]
    ChecksumMismatch,
    #[error("malformed model file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SvmError>;
