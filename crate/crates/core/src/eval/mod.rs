//! Confusion matrices, held-out experiments, block-size sweeps and label
//! overlays.

mod confusion;
mod overlay;
mod sweep;

pub use confusion::{accuracy, confusion, ConfusionMatrix};
pub use overlay::{label_color, overlay_labels};
pub use sweep::{holdout, sweep_block_sizes, HoldoutOutcome, SweepFailure, SweepReport, SweepRow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predictions} predictions for {truths} ground-truth labels")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("{labels} labels for {blocks} blocks")]
    CountMismatch { labels: usize, blocks: usize },
    #[error("block size {block_size}: {source}")]
    AtBlockSize {
        block_size: u32,
        source: Box<crate::Error>,
    },
}

pub type Result<T> = std::result::Result<T, EvalError>;
