//! Stratified k-fold cross-validation over a `(C, gamma)` grid for RBF
//! machines.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::kernel::{KernelMatrix, KernelSpec};
use super::multiclass::{fit_pairs, present_classes, resolve_votes};
use super::smo::SmoParams;
use super::{Result, SvmError};
use crate::dataset::DensityLabel;
use crate::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            c_grid: vec![0.1, 1.0, 10.0, 100.0],
            gamma_grid: vec![0.01, 0.1, 1.0, 10.0],
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub c: f64,
    pub gamma: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_c: f64,
    pub best_gamma: f64,
    /// Every evaluated point, sorted by `C` then `gamma`.
    pub points: Vec<GridPoint>,
}

/// Fold index of every sample. Each class is shuffled and dealt round-robin
/// so folds stay stratified.
pub fn stratified_folds(labels: &[DensityLabel], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(SvmError::InvalidParams(format!("need at least 2 folds, got {folds}")));
    }
    let mut assignment = vec![0; labels.len()];
    for class in DensityLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(SvmError::InsufficientSamples(format!(
                "class {class} has {} samples, fewer than {folds} folds",
                members.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1_000 + class.index() as u64));
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

/// Mean validation accuracy of every grid point; the best mean wins, ties
/// going to the smaller `C`, then the smaller `gamma`.
///
/// `base` supplies `tol`, `max_passes` and the root seed; its `C` and kernel
/// are replaced by the grid values.
pub fn grid_search_cv(
    features: &[Vec<f64>],
    labels: &[DensityLabel],
    grid: &GridConfig,
    base: &SmoParams,
) -> Result<GridResult> {
    if grid.c_grid.is_empty() || grid.gamma_grid.is_empty() {
        return Err(SvmError::InvalidParams("empty hyperparameter grid".into()));
    }
    if features.len() != labels.len() {
        return Err(SvmError::InvalidParams("features and labels differ in length".into()));
    }
    let classes = present_classes(labels)?;
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(SvmError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let fold_of = stratified_folds(labels, grid.folds, base.seed)?;

    let mut cs = grid.c_grid.clone();
    let mut gammas = grid.gamma_grid.clone();
    cs.sort_by(f64::total_cmp);
    gammas.sort_by(f64::total_cmp);
    for &g in &gammas {
        KernelSpec::Rbf { gamma: g }.validate()?;
    }
    for &c in &cs {
        SmoParams { c, ..*base }.validate()?;
    }

    let distances = KernelMatrix::squared_distances(features);
    let mut points = Vec::with_capacity(cs.len() * gammas.len());
    for &gamma in &gammas {
        let k = KernelMatrix::rbf_from_distances(&distances, gamma);
        let tasks: Vec<(usize, usize)> = (0..cs.len())
            .flat_map(|ci| (0..grid.folds).map(move |f| (ci, f)))
            .collect();
        let accuracies: Vec<f64> = tasks
            .par_iter()
            .map(|&(ci, fold)| {
                let params = SmoParams {
                    c: cs[ci],
                    kernel: KernelSpec::Rbf { gamma },
                    seed: derive_seed(base.seed, fold as u64),
                    ..*base
                };
                fold_accuracy(&k, labels, &classes, &fold_of, fold, &params)
            })
            .collect();
        for (ci, &c) in cs.iter().enumerate() {
            let fold_accuracies = accuracies[ci * grid.folds..(ci + 1) * grid.folds].to_vec();
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / grid.folds as f64;
            points.push(GridPoint {
                c,
                gamma,
                fold_accuracies,
                mean_accuracy,
            });
        }
    }
    points.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.gamma.total_cmp(&b.gamma)));
    let mut best = &points[0];
    for p in &points[1..] {
        if p.mean_accuracy > best.mean_accuracy {
            best = p;
        }
    }
    Ok(GridResult {
        best_c: best.c,
        best_gamma: best.gamma,
        points,
    })
}

fn fold_accuracy(
    k: &KernelMatrix,
    labels: &[DensityLabel],
    classes: &[DensityLabel],
    fold_of: &[usize],
    fold: usize,
    params: &SmoParams,
) -> f64 {
    let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != fold).collect();
    let valid: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == fold).collect();
    let fits = fit_pairs(k, &train, labels, classes, params);
    let correct = valid
        .iter()
        .filter(|&&v| {
            let mut votes = vec![0u32; classes.len()];
            for fit in &fits {
                let f: f64 = fit
                    .members
                    .iter()
                    .zip(&fit.solution.alpha)
                    .zip(&fit.y)
                    .filter(|((_, &a), _)| a > 0.0)
                    .map(|((&m, &a), &y)| a * y * k.get(m, v))
                    .sum::<f64>()
                    + fit.solution.bias;
                votes[if f >= 0.0 { fit.positive } else { fit.negative }] += 1;
            }
            resolve_votes(&votes, classes) == labels[v]
        })
        .count();
    correct as f64 / valid.len() as f64
}
