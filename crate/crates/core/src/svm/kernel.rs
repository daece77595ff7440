use rayon::prelude::*;

use super::{Result, SvmError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } if gamma.is_finite() && gamma > 0.0 => Ok(()),
            KernelSpec::Rbf { gamma } => Err(SvmError::InvalidParams(format!(
                "rbf gamma must be finite and positive, got {gamma}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelSpec::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
        }
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `exp(-gamma * |a - b|^2)` for rbf, `a . b` for linear.
pub fn kernel_eval(a: &[f64], b: &[f64], spec: &KernelSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SvmError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(spec.eval_unchecked(a, b))
}

/// Dense symmetric `n x n` matrix, row-major.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    /// Evaluates `f(i, j)` for `i <= j` in parallel and mirrors it.
    pub fn symmetric<F>(n: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| f(i, j)).collect())
            .collect();
        let mut data = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn gram(samples: &[Vec<f64>], spec: &KernelSpec) -> Self {
        Self::symmetric(samples.len(), |i, j| spec.eval_unchecked(&samples[i], &samples[j]))
    }

    pub fn squared_distances(samples: &[Vec<f64>]) -> Self {
        Self::symmetric(samples.len(), |i, j| squared_distance(&samples[i], &samples[j]))
    }

    /// Elementwise `exp(-gamma * d)` of a squared-distance matrix.
    pub fn rbf_from_distances(distances: &KernelMatrix, gamma: f64) -> Self {
        Self {
            n: distances.n,
            data: distances.data.par_iter().map(|d| (-gamma * d).exp()).collect(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}
