//! Block-wise crowd density estimation from texture.
//!
//! A frame is tiled into blocks, each block into overlapping cells. Every
//! cell contributes a completed local binary pattern histogram (sign,
//! magnitude and center components), the concatenation describes the block,
//! and a one-vs-one kernel SVM assigns one of four density levels.
//!
//! ```no_run
//! use crowd_clbp::dataset::load_manifest;
//! use crowd_clbp::pipeline::{extract_labeled, train_model, FeatureConfig, TrainConfig};
//!
//! let manifest = load_manifest("data/sample/manifest.txt")?;
//! let features = FeatureConfig::default();
//! let blocks = extract_labeled(&manifest, &features)?;
//! let trained = train_model(&blocks, &features, &TrainConfig::default())?;
//! println!("{} support vectors", trained.model.support_vector_count());
//! # Ok::<(), crowd_clbp::Error>(())
//! ```

pub mod baselines;
pub mod dataset;
pub mod descriptor;
pub mod eval;
pub mod imaging;
pub mod pipeline;
pub mod svm;

pub use dataset::{DensityLabel, Manifest};
pub use descriptor::{ClbpParams, FeatureVector, Histogram, Mapping, Scheme};
pub use eval::{ConfusionMatrix, SweepReport};
pub use imaging::{BlockGrid, GrayImage, Rect};
pub use pipeline::{DescriptorKind, FeatureConfig, TrainConfig};
pub use svm::{KernelSpec, MulticlassModel, SmoParams};

use thiserror::Error;

/// Any error raised by the library, grouped by the module that raised it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Imaging(#[from] imaging::ImagingError),
    #[error(transparent)]
    Descriptor(#[from] descriptor::DescriptorError),
    #[error(transparent)]
    Baseline(#[from] baselines::BaselineError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Svm(#[from] svm::SvmError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Geometry(String),
}

impl Error {
    /// Stable upper-case identifier used in `ERROR <code>: <detail>` lines.
    pub fn code(&self) -> &'static str {
        use baselines::BaselineError as B;
        use dataset::DatasetError as D;
        use descriptor::DescriptorError as De;
        use eval::EvalError as E;
        use imaging::ImagingError as I;
        use svm::SvmError as S;
        fn imaging(e: &I) -> &'static str {
            match e {
                I::FileNotFound(_) => "FILE_NOT_FOUND",
                I::UnsupportedFormat(_) => "UNSUPPORTED_FORMAT",
                I::CorruptImage(_) => "CORRUPT_IMAGE",
                I::InvalidImage(_) => "INVALID_IMAGE",
                I::BlockTooLarge { .. } => "BLOCK_TOO_LARGE",
                I::ZeroBlockSize => "ZERO_BLOCK_SIZE",
                I::CellTooLarge { .. } => "CELL_TOO_LARGE",
                I::InvalidOverlap(_) => "INVALID_OVERLAP",
                I::Io(_) => "IO",
            }
        }
        fn descriptor(e: &De) -> &'static str {
            match e {
                De::InvalidParams(_) => "INVALID_PARAMS",
                De::OutOfBounds { .. } => "OUT_OF_BOUNDS",
                De::ImageTooSmall { .. } => "IMAGE_TOO_SMALL",
                De::EmptyCell(_) => "EMPTY_CELL",
                De::Imaging(e) => imaging(e),
            }
        }
        fn svm(e: &S) -> &'static str {
            match e {
                S::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
                S::SingleClass => "SINGLE_CLASS",
                S::NoConvergence { .. } => "NO_CONVERGENCE",
                S::InvalidParams(_) => "INVALID_PARAMS",
                S::InsufficientSamples(_) => "INSUFFICIENT_SAMPLES",
                S::Io(_) => "IO",
                S::BadMagic => "BAD_MAGIC",
                S::VersionMismatch { .. } => "VERSION_MISMATCH",
                S::ChecksumMismatch => "CHECKSUM_MISMATCH",
                S::Format(_) => "MODEL_FORMAT",
            }
        }
        fn eval(e: &E) -> &'static str {
            match e {
                E::LengthMismatch { .. } => "LENGTH_MISMATCH",
                E::Empty => "EMPTY",
                E::CountMismatch { .. } => "COUNT_MISMATCH",
                E::AtBlockSize { source, .. } => source.code(),
            }
        }
        match self {
            Error::Imaging(e) => imaging(e),
            Error::Descriptor(e) => descriptor(e),
            Error::Baseline(B::InvalidParams(_)) => "INVALID_PARAMS",
            Error::Baseline(B::RegionTooSmall { .. }) => "REGION_TOO_SMALL",
            Error::Baseline(B::Descriptor(e)) => descriptor(e),
            Error::Dataset(e) => match e {
                D::Parse { .. } => "MANIFEST_PARSE",
                D::InconsistentLabel { .. } => "INCONSISTENT_LABEL",
                D::MissingFrame(_) => "MISSING_FRAME",
                D::BlockOutsideFrame { .. } => "BLOCK_OUTSIDE_FRAME",
                D::DuplicateAnnotation { .. } => "DUPLICATE_ANNOTATION",
                D::InsufficientData(_) => "INSUFFICIENT_DATA",
                D::Io { .. } => "IO",
                D::Imaging(e) => imaging(e),
            },
            Error::Svm(e) => svm(e),
            Error::Eval(e) => eval(e),
            Error::Config(_) => "CONFIG",
            Error::Geometry(_) => "GEOMETRY",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Sub-seed `index` of a root seed (SplitMix64 over the pair).
///
/// Every random stream in the crate is keyed this way, so results never
/// depend on the order parallel tasks happen to run in.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
