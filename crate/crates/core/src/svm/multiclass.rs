use log::warn;
use rayon::prelude::*;

use super::grid::GridConfig;
use super::kernel::KernelMatrix;
use super::smo::{self, BinaryModel, SmoParams, Solution};
use super::{Result, SvmError};
use crate::dataset::DensityLabel;
use crate::derive_seed;
use crate::pipeline::FeatureConfig;

/// Binary machine separating `positive` (decision >= 0) from `negative`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub positive: DensityLabel,
    pub negative: DensityLabel,
    pub model: BinaryModel,
}

/// One-vs-one ensemble over the classes present at training time.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub format_version: u32,
    /// Classes in density order.
    pub classes: Vec<DensityLabel>,
    /// One machine per unordered class pair, in lexicographic pair order.
    pub pairwise: Vec<PairModel>,
    pub params: SmoParams,
    /// Grid the hyperparameters were selected from, if any.
    pub grid: Option<GridConfig>,
    /// How features were extracted; echoed so prediction can repeat it.
    pub features: FeatureConfig,
    pub dim: usize,
}

impl MulticlassModel {
    pub fn converged(&self) -> bool {
        self.pairwise.iter().all(|p| p.model.converged)
    }

    pub fn support_vector_count(&self) -> usize {
        self.pairwise.iter().map(|p| p.model.coefs.len()).sum()
    }
}

pub(crate) struct PairFit {
    pub positive: usize,
    pub negative: usize,
    /// Indices into the kernel matrix, in the order the solver saw them.
    pub members: Vec<usize>,
    pub y: Vec<f64>,
    pub solution: Solution,
}

/// Present classes in density order; errors unless at least two.
pub(crate) fn present_classes(labels: &[DensityLabel]) -> Result<Vec<DensityLabel>> {
    let classes: Vec<DensityLabel> = DensityLabel::ALL
        .into_iter()
        .filter(|l| labels.contains(l))
        .collect();
    if classes.len() < 2 {
        return Err(SvmError::SingleClass);
    }
    Ok(classes)
}

/// Trains one machine per class pair on the samples `idx` of a kernel
/// matrix. Pair `p` draws its working pairs from `derive_seed(seed, p)`.
pub(crate) fn fit_pairs(
    k: &KernelMatrix,
    idx: &[usize],
    labels: &[DensityLabel],
    classes: &[DensityLabel],
    params: &SmoParams,
) -> Vec<PairFit> {
    let pairs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
        .collect();
    pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(a, b))| {
            let members: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| labels[i] == classes[a] || labels[i] == classes[b])
                .collect();
            let y: Vec<f64> = members
                .iter()
                .map(|&i| if labels[i] == classes[a] { 1.0 } else { -1.0 })
                .collect();
            let local = KernelMatrix::symmetric(members.len(), |r, c| k.get(members[r], members[c]));
            let pair_params = SmoParams {
                seed: derive_seed(params.seed, p as u64),
                ..*params
            };
            let solution = smo::solve(&local, &y, &pair_params, false);
            if !solution.converged {
                warn!(
                    "{} vs {}: no convergence after {} passes; keeping best-so-far model",
                    classes[a], classes[b], solution.passes
                );
            }
            PairFit {
                positive: a,
                negative: b,
                members,
                y,
                solution,
            }
        })
        .collect()
}

/// Trains a one-vs-one model; pairs see only their two classes' samples.
pub fn train_multiclass(features: &[Vec<f64>], labels: &[DensityLabel], params: &SmoParams) -> Result<MulticlassModel> {
    params.validate()?;
    if features.len() != labels.len() {
        return Err(SvmError::InvalidParams(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let classes = present_classes(labels)?;
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(SvmError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let k = KernelMatrix::gram(features, &params.kernel);
    let idx: Vec<usize> = (0..features.len()).collect();
    let pairwise = fit_pairs(&k, &idx, labels, &classes, params)
        .into_iter()
        .map(|fit| PairModel {
            positive: classes[fit.positive],
            negative: classes[fit.negative],
            model: smo::assemble(&fit.solution, &fit.y, params.kernel, |local| {
                features[fit.members[local]].clone()
            }),
        })
        .collect();
    Ok(MulticlassModel {
        format_version: super::FORMAT_VERSION,
        classes,
        pairwise,
        params: *params,
        grid: None,
        features: FeatureConfig::default(),
        dim,
    })
}

/// Winner of a vote tally over `classes`; ties go to the earliest class.
pub fn resolve_votes(votes: &[u32], classes: &[DensityLabel]) -> DensityLabel {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    classes[best]
}

/// Majority vote of the pairwise machines. Returns the label and the vote
/// count of every class in `model.classes`.
pub fn predict(model: &MulticlassModel, x: &[f64]) -> Result<(DensityLabel, Vec<u32>)> {
    if x.len() != model.dim {
        return Err(SvmError::DimensionMismatch {
            expected: model.dim,
            found: x.len(),
        });
    }
    let mut votes = vec![0u32; model.classes.len()];
    let slot = |label: DensityLabel| model.classes.iter().position(|&c| c == label).expect("pair classes are model classes");
    for pair in &model.pairwise {
        let winner = if pair.model.decision_unchecked(x) >= 0.0 {
            pair.positive
        } else {
            pair.negative
        };
        votes[slot(winner)] += 1;
    }
    Ok((resolve_votes(&votes, &model.classes), votes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::KernelSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(per_class: usize, classes: &[DensityLabel], seed: u64) -> (Vec<Vec<f64>>, Vec<DensityLabel>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &c in classes {
            let center = [c.index() as f64 * 3.0, (c.index() % 2) as f64 * 2.0];
            for _ in 0..per_class {
                xs.push(vec![center[0] + rng.random_range(-0.6..0.6), center[1] + rng.random_range(-0.6..0.6)]);
                ys.push(c);
            }
        }
        (xs, ys)
    }

    fn rbf() -> SmoParams {
        SmoParams {
            c: 10.0,
            kernel: KernelSpec::Rbf { gamma: 0.5 },
            ..SmoParams::default()
        }
    }

    #[test]
    fn pair_counts() {
        let (xs, ys) = blobs(10, &[DensityLabel::Low, DensityLabel::High], 1);
        assert_eq!(train_multiclass(&xs, &ys, &rbf()).unwrap().pairwise.len(), 1);
        let (xs, ys) = blobs(10, &DensityLabel::ALL, 1);
        let m = train_multiclass(&xs, &ys, &rbf()).unwrap();
        assert_eq!(m.pairwise.len(), 6);
        assert_eq!(m.classes, DensityLabel::ALL.to_vec());
    }

    #[test]
    fn separable_four_class_training_accuracy() {
        let (xs, ys) = blobs(30, &DensityLabel::ALL, 2);
        let m = train_multiclass(&xs, &ys, &rbf()).unwrap();
        let correct = xs.iter().zip(&ys).filter(|(x, y)| predict(&m, x).unwrap().0 == **y).count();
        assert!(correct as f64 / xs.len() as f64 >= 0.95);
        for pair in &m.pairwise {
            for sv in &pair.model.support_vectors {
                let i = xs.iter().position(|x| x == sv).unwrap();
                assert_eq!(predict(&m, sv).unwrap().0, ys[i]);
            }
        }
    }

    #[test]
    fn votes_sum_to_pair_count() {
        let (xs, ys) = blobs(8, &DensityLabel::ALL, 3);
        let m = train_multiclass(&xs, &ys, &rbf()).unwrap();
        for gx in -2..12 {
            let (_, votes) = predict(&m, &[f64::from(gx), 1.0]).unwrap();
            assert_eq!(votes.iter().sum::<u32>(), 6);
        }
        assert!(matches!(predict(&m, &[1.0]), Err(SvmError::DimensionMismatch { .. })));
    }

    #[test]
    fn vote_resolution() {
        let all = DensityLabel::ALL;
        assert_eq!(resolve_votes(&[3, 2, 1, 0], &all), DensityLabel::VeryLow);
        assert_eq!(resolve_votes(&[2, 2, 1, 1], &all), DensityLabel::VeryLow);
        assert_eq!(resolve_votes(&[0, 1, 2, 3], &all), DensityLabel::High);
        assert_eq!(resolve_votes(&[1, 2, 2, 1], &all), DensityLabel::Low);
    }

    #[test]
    fn single_class_rejected() {
        let (xs, ys) = blobs(5, &[DensityLabel::Medium], 4);
        assert!(matches!(train_multiclass(&xs, &ys, &rbf()), Err(SvmError::SingleClass)));
    }
}
