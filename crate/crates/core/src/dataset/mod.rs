//! Density labels, block annotation manifests, splitting and the synthetic
//! crowd-texture generator.

mod label;
mod manifest;
mod split;
mod synth;

pub use label::{label_from_count, DensityLabel};
pub use manifest::{load_manifest, BlockAnnotation, FrameEntry, Manifest};
pub use split::split;
pub use synth::{person_count_range, synth_crowd_texture, write_synth_corpus, SYNTH_NOISE_SIGMA, SYNTH_REFERENCE_SIZE};

use thiserror::Error;

use crate::imaging::ImagingError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: bad {field}: {detail}")]
    Parse {
        line: usize,
        field: &'static str,
        detail: String,
    },
    #[error("line {line}: person count {count} implies {expected}, annotated {found}")]
    InconsistentLabel {
        line: usize,
        count: u32,
        expected: DensityLabel,
        found: DensityLabel,
    },
    #[error("frame not found: {0}")]
    MissingFrame(String),
    #[error("block {x} {y} {w} {h} lies outside frame {frame} ({width}x{height})")]
    BlockOutsideFrame {
        frame: String,
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        width: u32,
        height: u32,
    },
    #[error("line {line}: duplicate annotation of frame {frame}")]
    DuplicateAnnotation { line: usize, frame: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;
