use std::fmt::Write as _;

use super::{EvalError, Result};
use crate::dataset::DensityLabel;

/// Counts of (truth, prediction) pairs over all four density levels.
/// Rows are ground truth, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<DensityLabel>,
    pub counts: Vec<Vec<u64>>,
}

/// Tallies predictions against ground truth.
pub fn confusion(predictions: &[DensityLabel], truth: &[DensityLabel]) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truths: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts = vec![vec![0u64; 4]; 4];
    for (p, t) in predictions.iter().zip(truth) {
        counts[t.index()][p.index()] += 1;
    }
    Ok(ConfusionMatrix {
        classes: DensityLabel::ALL.to_vec(),
        counts,
    })
}

/// Fraction of samples on the diagonal.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    Ok(cm.trace() as f64 / total as f64)
}

impl ConfusionMatrix {
    /// Matrix over all four levels from raw counts.
    pub fn from_counts(counts: [[u64; 4]; 4]) -> Self {
        Self {
            classes: DensityLabel::ALL.to_vec(),
            counts: counts.iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> Result<f64> {
        accuracy(self)
    }

    /// Each row as percentages of its total; all zeros for empty rows.
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    /// Human-readable row-percentage table, truth down the side.
    pub fn to_table(&self) -> String {
        let width = 10;
        let mut out = format!("{:<width$}", "");
        for c in &self.classes {
            write!(out, "{:>width$}", c.title()).unwrap();
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(self.row_percentages()) {
            write!(out, "{:<width$}", c.title()).unwrap();
            for v in row {
                write!(out, "{v:>width$.1}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// `truth,predicted,count,row_percent`, one line per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("truth,predicted,count,row_percent\n");
        let pct = self.row_percentages();
        for (i, t) in self.classes.iter().enumerate() {
            for (j, p) in self.classes.iter().enumerate() {
                writeln!(out, "{},{},{},{:.3}", t.name(), p.name(), self.counts[i][j], pct[i][j]).unwrap();
            }
        }
        out
    }
}
