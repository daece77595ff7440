use std::fmt::Write as _;
use std::time::Instant;

use log::info;

use super::confusion::{confusion, ConfusionMatrix};
use super::EvalError;
use crate::dataset::{split, DensityLabel, Manifest};
use crate::pipeline::{extract_labeled, predict_blocks, train_model, DescriptorKind, FeatureConfig, TrainConfig, Trained};
use crate::Result;

/// Result of training on one part of a manifest and testing on the rest.
#[derive(Debug, Clone)]
pub struct HoldoutOutcome {
    pub trained: Trained,
    pub truth: Vec<DensityLabel>,
    pub predicted: Vec<DensityLabel>,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub train_blocks: usize,
}

/// Frame-level stratified split, feature extraction, training (with the
/// configured grid search) and scoring of the held-out blocks.
pub fn holdout(
    manifest: &Manifest,
    features: &FeatureConfig,
    train: &TrainConfig,
    test_fraction: f64,
    seed: u64,
) -> Result<HoldoutOutcome> {
    let (train_part, test_part) = split(manifest, test_fraction, seed)?;
    let train_blocks = extract_labeled(&train_part, features)?;
    let test_blocks = extract_labeled(&test_part, features)?;
    let trained = train_model(&train_blocks, features, train)?;
    let predicted = predict_blocks(&trained.model, &test_blocks.features)?;
    let cm = confusion(&predicted, &test_blocks.labels)?;
    let accuracy = cm.accuracy()?;
    Ok(HoldoutOutcome {
        trained,
        truth: test_blocks.labels,
        predicted,
        confusion: cm,
        accuracy,
        train_blocks: train_blocks.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub block_size: u32,
    pub accuracy: f64,
    /// Wall-clock seconds, rounded to the millisecond.
    pub seconds: f64,
}

#[derive(Debug)]
pub struct SweepFailure {
    pub block_size: u32,
    pub seconds: f64,
    pub error: crate::Error,
}

/// Held-out accuracy of one descriptor at several block sizes.
#[derive(Debug)]
pub struct SweepReport {
    pub descriptor: DescriptorKind,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

impl SweepReport {
    pub fn accuracy_at(&self, block_size: u32) -> Option<f64> {
        self.rows.iter().find(|r| r.block_size == block_size).map(|r| r.accuracy)
    }

    /// `descriptor,block_size,accuracy,seconds`; failed sizes report
    /// `error` as their accuracy. Rows follow the requested size order.
    pub fn to_csv(&self, header: bool) -> String {
        let mut lines: Vec<(u32, String)> = self
            .rows
            .iter()
            .map(|r| (r.block_size, format!("{},{},{:.6},{:.3}", self.descriptor.name(), r.block_size, r.accuracy, r.seconds)))
            .chain(
                self.failures
                    .iter()
                    .map(|f| (f.block_size, format!("{},{},error,{:.3}", self.descriptor.name(), f.block_size, f.seconds))),
            )
            .collect();
        lines.sort_by_key(|(size, _)| self.order_of(*size));
        let mut out = String::new();
        if header {
            out.push_str("descriptor,block_size,accuracy,seconds\n");
        }
        for (_, line) in lines {
            writeln!(out, "{line}").unwrap();
        }
        out
    }

    fn order_of(&self, size: u32) -> usize {
        self.rows
            .iter()
            .map(|r| r.block_size)
            .chain(self.failures.iter().map(|f| f.block_size))
            .position(|s| s == size)
            .unwrap_or(usize::MAX)
    }

    /// The first failure, tagged with its block size.
    pub fn into_result(mut self) -> std::result::Result<Self, EvalError> {
        if self.failures.is_empty() {
            return Ok(self);
        }
        let f = self.failures.remove(0);
        Err(EvalError::AtBlockSize {
            block_size: f.block_size,
            source: Box::new(f.error),
        })
    }
}

/// Re-partitions, re-extracts and retrains at each block size with a fresh
/// split drawn from `seed`. A size that fails is recorded and the sweep
/// moves on.
pub fn sweep_block_sizes(
    manifest: &Manifest,
    sizes: &[u32],
    features: &FeatureConfig,
    train: &TrainConfig,
    test_fraction: f64,
    seed: u64,
) -> SweepReport {
    let mut report = SweepReport {
        descriptor: features.descriptor,
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for &block_size in sizes {
        let config = FeatureConfig { block_size, ..*features };
        let start = Instant::now();
        let outcome = holdout(manifest, &config, train, test_fraction, seed);
        let seconds = (start.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
        match outcome {
            Ok(o) => {
                info!("{} @ {block_size}: accuracy {:.4} in {seconds:.3}s", features.descriptor.name(), o.accuracy);
                report.rows.push(SweepRow {
                    block_size,
                    accuracy: o.accuracy,
                    seconds,
                });
            }
            Err(error) => report.failures.push(SweepFailure {
                block_size,
                seconds,
                error,
            }),
        }
    }
    report
}
