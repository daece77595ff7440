//! Frame to block features, labeled training sets, and model training.

use log::info;
use rayon::prelude::*;

use crate::baselines::{glcm_block_feature, lbp_block_feature};
use crate::dataset::{DensityLabel, Manifest};
use crate::descriptor::{ClbpParams, FrameCodes};
use crate::imaging::{cells_of_block, load_grayscale, scaled_cells, BlockGrid, GrayImage, Rect};
use crate::svm::{grid_search_cv, predict, train_multiclass, GridConfig, GridResult, KernelSpec, MulticlassModel, SmoParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    Clbp,
    Lbp,
    Glcm,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 3] = [DescriptorKind::Clbp, DescriptorKind::Lbp, DescriptorKind::Glcm];

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::Clbp => "clbp",
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::Glcm => "glcm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name().eq_ignore_ascii_case(s.trim()))
    }
}

/// Everything that determines a block's feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub descriptor: DescriptorKind,
    pub clbp: ClbpParams,
    /// Gray levels of the GLCM baseline.
    pub glcm_levels: u32,
    pub block_size: u32,
    pub cell_size: u32,
    /// Fraction of a cell shared with its neighbor, in `[0, 1)`.
    pub overlap: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            descriptor: DescriptorKind::Clbp,
            clbp: ClbpParams::default(),
            glcm_levels: 8,
            block_size: 96,
            cell_size: 32,
            overlap: 0.5,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.clbp.validate()?;
        if !(2..=256).contains(&self.glcm_levels) {
            return Err(Error::Config(format!("glcm levels must lie in 2..=256, got {}", self.glcm_levels)));
        }
        if self.block_size == 0 {
            return Err(crate::imaging::ImagingError::ZeroBlockSize.into());
        }
        self.nominal_cells()?;
        Ok(())
    }

    fn nominal_cells(&self) -> Result<Vec<Rect>> {
        Ok(cells_of_block(
            Rect::new(0, 0, self.block_size, self.block_size),
            self.cell_size,
            self.overlap,
        )?)
    }

    /// Cells per block; identical for every block of a grid.
    pub fn cell_count(&self) -> Result<usize> {
        Ok(self.nominal_cells()?.len())
    }

    /// Length of every block feature vector.
    pub fn feature_len(&self) -> Result<usize> {
        let per_cell = match self.descriptor {
            DescriptorKind::Clbp => self.clbp.bin_count(),
            DescriptorKind::Lbp => self.clbp.pattern_bins(),
            DescriptorKind::Glcm => 5,
        };
        Ok(self.cell_count()? * per_cell)
    }

    /// Cells of one grid block, stretched onto oversized edge blocks.
    pub fn cells(&self, block: Rect) -> Result<Vec<Rect>> {
        Ok(scaled_cells(block, self.block_size, self.cell_size, self.overlap)?)
    }
}

/// Tiles `image` and describes every block, in row-major block order.
pub fn frame_features(image: &GrayImage, config: &FeatureConfig) -> Result<(BlockGrid, Vec<Vec<f64>>)> {
    config.validate()?;
    let grid = BlockGrid::new(image.width(), image.height(), config.block_size)?;
    let features = block_features(image, &grid.blocks, config)?;
    Ok((grid, features))
}

fn block_features(image: &GrayImage, blocks: &[Rect], config: &FeatureConfig) -> Result<Vec<Vec<f64>>> {
    let codes = match config.descriptor {
        DescriptorKind::Clbp | DescriptorKind::Lbp => Some(FrameCodes::compute(image, &config.clbp)?),
        DescriptorKind::Glcm => None,
    };
    blocks
        .par_iter()
        .map(|&block| {
            let cells = config.cells(block)?;
            Ok(match (&codes, config.descriptor) {
                (Some(codes), DescriptorKind::Clbp) => codes.block_feature(block, &cells)?.values,
                (Some(codes), _) => lbp_block_feature(codes, &cells)?,
                (None, _) => glcm_block_feature(image, &cells, config.glcm_levels, true)?,
            })
        })
        .collect()
}

/// Labeled block features drawn from a manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledBlocks {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<DensityLabel>,
    /// Frame id and rectangle of every sample.
    pub origins: Vec<(String, Rect)>,
}

impl LabeledBlocks {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Label of a grid block: that of the annotation covering the largest part
/// of it, provided it covers at least half. Earlier annotations win ties.
pub fn block_label(block: Rect, annotations: &[(Rect, DensityLabel)]) -> Option<DensityLabel> {
    let mut best: Option<(u64, DensityLabel)> = None;
    for &(rect, label) in annotations {
        let a = block.intersection_area(&rect);
        if best.is_none_or(|(b, _)| a > b) {
            best = Some((a, label));
        }
    }
    best.filter(|&(a, _)| 2 * a >= block.area()).map(|(_, l)| l)
}

/// Re-tiles every manifest frame at `config.block_size` and describes each
/// block that is at least half covered by an annotation. Samples come out in
/// manifest frame order, then row-major block order.
pub fn extract_labeled(manifest: &Manifest, config: &FeatureConfig) -> Result<LabeledBlocks> {
    config.validate()?;
    let per_frame: Vec<LabeledBlocks> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let path = manifest.frame_path(&entry.frame_id);
            let image = load_grayscale(&path)?;
            let grid = BlockGrid::new(image.width(), image.height(), config.block_size)?;
            let annotated: Vec<(Rect, DensityLabel)> =
                entry.annotations.iter().map(|a| (a.block, a.label)).collect();
            let (blocks, labels): (Vec<Rect>, Vec<DensityLabel>) = grid
                .blocks
                .iter()
                .filter_map(|&b| block_label(b, &annotated).map(|l| (b, l)))
                .unzip();
            let features = block_features(&image, &blocks, config)?;
            Ok(LabeledBlocks {
                features,
                labels,
                origins: blocks.into_iter().map(|b| (entry.frame_id.clone(), b)).collect(),
            })
        })
        .collect::<Result<_>>()?;
    let mut out = LabeledBlocks::default();
    for f in per_frame {
        out.features.extend(f.features);
        out.labels.extend(f.labels);
        out.origins.extend(f.origins);
    }
    info!("extracted {} labeled blocks from {} frames", out.len(), manifest.entries.len());
    Ok(out)
}

/// SVM training settings. With a grid, `C` and the RBF `gamma` of `smo` are
/// replaced by the cross-validated choice.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub smo: SmoParams,
    pub grid: Option<GridConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            smo: SmoParams::default(),
            grid: Some(GridConfig::default()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: MulticlassModel,
    pub grid: Option<GridResult>,
}

/// Optionally grid-searches, then fits the final model on all of `blocks`.
pub fn train_model(blocks: &LabeledBlocks, features: &FeatureConfig, config: &TrainConfig) -> Result<Trained> {
    features.validate()?;
    if blocks.is_empty() {
        return Err(crate::dataset::DatasetError::InsufficientData("no labeled blocks to train on".into()).into());
    }
    let expected = features.feature_len()?;
    if let Some(f) = blocks.features.iter().find(|f| f.len() != expected) {
        return Err(Error::Geometry(format!(
            "feature length {} does not match configuration ({expected})",
            f.len()
        )));
    }
    let mut smo = config.smo;
    let search = match &config.grid {
        Some(grid) => {
            let result = grid_search_cv(&blocks.features, &blocks.labels, grid, &smo)?;
            info!(
                "grid search picked C={} gamma={} (cv accuracy {:.4})",
                result.best_c,
                result.best_gamma,
                result
                    .points
                    .iter()
                    .map(|p| p.mean_accuracy)
                    .fold(0.0, f64::max)
            );
            smo.c = result.best_c;
            smo.kernel = KernelSpec::Rbf { gamma: result.best_gamma };
            Some(result)
        }
        None => None,
    };
    let mut model = train_multiclass(&blocks.features, &blocks.labels, &smo)?;
    model.grid = config.grid.clone();
    model.features = *features;
    Ok(Trained { model, grid: search })
}

/// Per-block prediction and vote tally.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPrediction {
    pub block: Rect,
    pub label: DensityLabel,
    pub votes: Vec<u32>,
}

/// Labels every block of a frame with the model's own feature settings.
pub fn predict_frame(model: &MulticlassModel, image: &GrayImage) -> Result<(BlockGrid, Vec<BlockPrediction>)> {
    let (grid, features) = frame_features(image, &model.features)?;
    let predictions = grid
        .blocks
        .iter()
        .zip(&features)
        .map(|(&block, x)| {
            let (label, votes) = predict(model, x)?;
            Ok(BlockPrediction { block, label, votes })
        })
        .collect::<Result<_>>()?;
    Ok((grid, predictions))
}

/// Predicted label of every sample.
pub fn predict_blocks(model: &MulticlassModel, features: &[Vec<f64>]) -> Result<Vec<DensityLabel>> {
    features
        .par_iter()
        .map(|x| Ok(predict(model, x)?.0))
        .collect()
}
