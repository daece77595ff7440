//! Sequential minimal optimization for the binary soft-margin dual
//!
//! ```text
//! maximize   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! with decision function `f(x) = sum_i a_i y_i K(x_i, x) + b`.
//!
//! The outer loop alternates full sweeps with sweeps over the non-bound
//! multipliers. For each KKT violator the partner is drawn at random from a
//! seeded generator; if that pair cannot move, the remaining candidates are
//! scanned from a random offset. Training has converged once a full sweep
//! finds no violator, which means every KKT residual is within `tol`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernel::{KernelMatrix, KernelSpec};
use super::{Result, SvmError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub kernel: KernelSpec,
    pub tol: f64,
    /// Limit on full sweeps over the training set.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            kernel: KernelSpec::Rbf { gamma: 1.0 },
            tol: 1e-3,
            max_passes: 100,
            seed: 0,
        }
    }
}

impl SmoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvmError::InvalidParams(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SvmError::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidParams("max_passes must be at least 1".into()));
        }
        self.kernel.validate()
    }
}

/// Trained binary machine. `coefs[i]` is the signed multiplier `a_i y_i` of
/// `support_vectors[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub coefs: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub converged: bool,
}

impl BinaryModel {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    #[inline]
    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefs)
            .map(|(sv, c)| c * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

pub fn decision_value(model: &BinaryModel, x: &[f64]) -> Result<f64> {
    if let Some(dim) = model.dim() {
        if dim != x.len() {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
    }
    Ok(model.decision_unchecked(x))
}

/// Trains on `samples` with labels in `{-1, +1}`.
///
/// When `max_passes` full sweeps are exhausted the best model so far comes
/// back inside [`SvmError::NoConvergence`], flagged `converged: false`.
pub fn train_binary(samples: &[Vec<f64>], labels: &[f64], params: &SmoParams) -> Result<BinaryModel> {
    params.validate()?;
    if samples.len() != labels.len() {
        return Err(SvmError::InvalidParams(format!(
            "{} samples but {} labels",
            samples.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(SvmError::InvalidParams(format!("label {bad} is not -1 or +1")));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(SvmError::SingleClass);
    }
    let dim = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(SvmError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let gram = KernelMatrix::gram(samples, &params.kernel);
    let sol = solve(&gram, labels, params, false);
    let model = assemble(&sol, labels, params.kernel, |i| samples[i].clone());
    if sol.converged {
        Ok(model)
    } else {
        Err(SvmError::NoConvergence {
            passes: sol.passes,
            model: Box::new(model),
        })
    }
}

pub(crate) fn assemble<F>(sol: &Solution, y: &[f64], kernel: KernelSpec, mut vector: F) -> BinaryModel
where
    F: FnMut(usize) -> Vec<f64>,
{
    let mut support_vectors = Vec::new();
    let mut coefs = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(vector(i));
            coefs.push(a * y[i]);
        }
    }
    BinaryModel {
        support_vectors,
        coefs,
        bias: sol.bias,
        kernel,
        converged: sol.converged,
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub passes: usize,
    /// Dual objective after each accepted update, when tracing.
    #[cfg_attr(not(test), allow(dead_code))]
    pub objective: Vec<f64>,
}

/// Consecutive sweeps over non-bound multipliers before forcing a full one.
const MAX_NONBOUND_SWEEPS: usize = 50;
const STEP_EPS: f64 = 1e-9;
const BOUND_EPS: f64 = 1e-10;

struct Solver<'a> {
    k: &'a KernelMatrix,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    /// `f(x_i) - y_i` for every sample.
    err: Vec<f64>,
    bias: f64,
    rng: ChaCha8Rng,
    trace: Option<Vec<f64>>,
}

pub(crate) fn solve(k: &KernelMatrix, y: &[f64], params: &SmoParams, trace: bool) -> Solution {
    let n = y.len();
    debug_assert_eq!(k.len(), n);
    let mut s = Solver {
        k,
        y,
        c: params.c,
        tol: params.tol,
        alpha: vec![0.0; n],
        err: y.iter().map(|v| -v).collect(),
        bias: 0.0,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        trace: trace.then(Vec::new),
    };
    let mut passes = 0;
    let mut examine_all = true;
    let mut nonbound_sweeps = 0;
    let converged = loop {
        let changed = if examine_all {
            if passes == params.max_passes {
                break false;
            }
            passes += 1;
            (0..n).map(|i| s.examine(i)).sum::<usize>()
        } else {
            nonbound_sweeps += 1;
            let mut changed = 0;
            for i in 0..n {
                if s.alpha[i] > 0.0 && s.alpha[i] < s.c {
                    changed += s.examine(i);
                }
            }
            changed
        };
        if examine_all {
            if changed == 0 && !s.refit_bias() {
                break true;
            }
            if changed == 0 {
                continue;
            }
            examine_all = false;
            nonbound_sweeps = 0;
        } else if changed == 0 || nonbound_sweeps >= MAX_NONBOUND_SWEEPS {
            examine_all = true;
        }
    };
    Solution {
        alpha: s.alpha,
        bias: s.bias,
        converged,
        passes,
        objective: s.trace.unwrap_or_default(),
    }
}

impl Solver<'_> {
    fn violates(&self, i: usize) -> bool {
        let r = self.err[i] * self.y[i];
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn examine(&mut self, i: usize) -> usize {
        let n = self.y.len();
        if n < 2 || !self.violates(i) {
            return 0;
        }
        let mut j = self.rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        if self.step(j, i) {
            return 1;
        }
        let start = self.rng.random_range(0..n);
        for off in 0..n {
            let j = (start + off) % n;
            if j != i && self.step(j, i) {
                return 1;
            }
        }
        0
    }

    /// Gain in the dual objective from moving `a_i` by `d1` and `a_j` by
    /// `d2`.
    fn gain(&self, i: usize, j: usize, d1: f64, d2: f64) -> f64 {
        let (yi, yj) = (self.y[i], self.y[j]);
        let gi = self.err[i] + yi - self.bias;
        let gj = self.err[j] + yj - self.bias;
        d1 + d2
            - (d1 * yi * gi + d2 * yj * gj)
            - 0.5 * (d1 * d1 * self.k.get(i, i) + d2 * d2 * self.k.get(j, j) + 2.0 * d1 * d2 * yi * yj * self.k.get(i, j))
    }

    fn clip(&self, a: f64) -> f64 {
        if a < BOUND_EPS * self.c {
            0.0
        } else if a > self.c * (1.0 - BOUND_EPS) {
            self.c
        } else {
            a
        }
    }

    fn step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a1, a2) = (self.alpha[i], self.alpha[j]);
        let (y1, y2) = (self.y[i], self.y[j]);
        let (e1, e2) = (self.err[i], self.err[j]);
        let s = y1 * y2;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        };
        if hi - lo <= BOUND_EPS * self.c {
            return false;
        }
        let (k11, k12, k22) = (self.k.get(i, i), self.k.get(i, j), self.k.get(j, j));
        let eta = k11 + k22 - 2.0 * k12;
        let new2 = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat or non-convex along the constraint line: the maximum is
            // at an end point.
            let at = |t: f64| self.gain(i, j, s * (a2 - t), t - a2);
            let (g_lo, g_hi) = (at(lo), at(hi));
            if g_lo > g_hi + STEP_EPS {
                lo
            } else if g_hi > g_lo + STEP_EPS {
                hi
            } else {
                return false;
            }
        };
        let new2 = self.clip(new2);
        if (new2 - a2).abs() < STEP_EPS * (new2 + a2 + STEP_EPS) {
            return false;
        }
        let new1 = self.clip(a1 + s * (a2 - new2));
        let (d1, d2) = (new1 - a1, new2 - a2);

        #[cfg(debug_assertions)]
        let before = (self.y.len() <= 200).then(|| self.objective());

        let b1 = self.bias - e1 - y1 * d1 * k11 - y2 * d2 * k12;
        let b2 = self.bias - e2 - y1 * d1 * k12 - y2 * d2 * k22;
        let bias = if new1 > 0.0 && new1 < self.c {
            b1
        } else if new2 > 0.0 && new2 < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = bias - self.bias;
        for (k, e) in self.err.iter_mut().enumerate() {
            *e += y1 * d1 * self.k.get(i, k) + y2 * d2 * self.k.get(j, k) + db;
        }
        self.alpha[i] = new1;
        self.alpha[j] = new2;
        self.bias = bias;

        #[cfg(debug_assertions)]
        if let Some(before) = before {
            let after = self.objective();
            debug_assert!(
                after >= before - 1e-9 * (1.0 + before.abs()),
                "dual objective fell from {before} to {after}"
            );
        }
        if self.trace.is_some() {
            let w = self.objective();
            if let Some(trace) = &mut self.trace {
                trace.push(w);
            }
        }
        true
    }

    /// Re-derives the bias from all multipliers: the mean over free ones,
    /// else the middle of the interval the bound ones allow. The pairwise
    /// update only sees two points and can leave a bias under which points
    /// look violated that no pair step can repair. Returns whether the bias
    /// moved.
    fn refit_bias(&mut self) -> bool {
        let mut free_sum = 0.0;
        let mut free = 0usize;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.y.len() {
            // y_i - g_i where f = g + b and err = f - y.
            let b = self.bias - self.err[i];
            let a = self.alpha[i];
            if a > 0.0 && a < self.c {
                free_sum += b;
                free += 1;
            } else if (self.y[i] > 0.0) == (a == 0.0) {
                lo = lo.max(b);
            } else {
                hi = hi.min(b);
            }
        }
        let bias = if free > 0 {
            free_sum / free as f64
        } else if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            self.bias
        };
        let db = bias - self.bias;
        if db.abs() <= 1e-12 * (1.0 + bias.abs()) {
            return false;
        }
        for e in &mut self.err {
            *e += db;
        }
        self.bias = bias;
        true
    }

    fn objective(&self) -> f64 {
        let n = self.y.len();
        let mut quad = 0.0;
        for i in 0..n {
            if self.alpha[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                quad += self.alpha[i] * self.alpha[j] * self.y[i] * self.y[j] * self.k.get(i, j);
            }
        }
        self.alpha.iter().sum::<f64>() - 0.5 * quad
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params(c: f64, kernel: KernelSpec) -> SmoParams {
        SmoParams {
            c,
            kernel,
            ..SmoParams::default()
        }
    }

    /// KKT residual of every training point under the model's decision
    /// function.
    pub(crate) fn kkt_residuals(sol: &Solution, k: &KernelMatrix, y: &[f64], c: f64) -> Vec<f64> {
        (0..y.len())
            .map(|i| {
                let f: f64 = (0..y.len()).map(|j| sol.alpha[j] * y[j] * k.get(i, j)).sum::<f64>() + sol.bias;
                let r = y[i] * f - 1.0;
                let a = sol.alpha[i];
                if a == 0.0 {
                    (-r).max(0.0)
                } else if a == c {
                    r.max(0.0)
                } else {
                    r.abs()
                }
            })
            .collect()
    }

    #[test]
    fn two_points_split_at_midpoint() {
        let xs = vec![vec![0.0], vec![1.0]];
        let ys = vec![-1.0, 1.0];
        let m = train_binary(&xs, &ys, &params(1000.0, KernelSpec::Linear)).unwrap();
        // Max margin: w = 2, b = -1, boundary at 0.5.
        assert!((decision_value(&m, &[0.5]).unwrap()).abs() < 1e-6);
        assert!(decision_value(&m, &[0.0]).unwrap() < 0.0);
        assert!(decision_value(&m, &[1.0]).unwrap() > 0.0);
        assert!((decision_value(&m, &[1.0]).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn xor_with_rbf() {
        let xs = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let ys = vec![-1.0, -1.0, 1.0, 1.0];
        let m = train_binary(&xs, &ys, &params(10.0, KernelSpec::Rbf { gamma: 1.0 })).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(decision_value(&m, x).unwrap().signum(), *y);
        }
        // A probe far from every support vector only sees the bias.
        assert!((decision_value(&m, &[40.0, -40.0]).unwrap() - m.bias).abs() < 1e-12);
    }

    #[test]
    fn nonbound_support_vectors_sit_on_the_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] + 0.3 * x[1] > 0.0 { 1.0 } else { -1.0 }).collect();
        let p = params(5.0, KernelSpec::Rbf { gamma: 2.0 });
        let m = train_binary(&xs, &ys, &p).unwrap();
        let mut checked = 0;
        for (sv, c) in m.support_vectors.iter().zip(&m.coefs) {
            if c.abs() < p.c {
                let label = c.signum();
                assert!((decision_value(&m, sv).unwrap() - label).abs() <= p.tol + 1e-9);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn duplicated_data_keeps_decision_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<Vec<f64>> = (0..24).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] * x[1] > 0.0 { 1.0 } else { -1.0 }).collect();
        let p = params(10.0, KernelSpec::Rbf { gamma: 3.0 });
        let once = train_binary(&xs, &ys, &p).unwrap();
        let twice_x: Vec<Vec<f64>> = xs.iter().chain(&xs).cloned().collect();
        let twice_y: Vec<f64> = ys.iter().chain(&ys).copied().collect();
        let twice = train_binary(&twice_x, &twice_y, &p).unwrap();
        let mut compared = 0;
        for gx in 0..9 {
            for gy in 0..9 {
                let probe = [-1.0 + 0.25 * f64::from(gx), -1.0 + 0.25 * f64::from(gy)];
                let a = decision_value(&once, &probe).unwrap();
                let b = decision_value(&twice, &probe).unwrap();
                // Both solve the same problem up to tol; skip probes on the
                // boundary itself.
                if a.abs() > 0.05 && b.abs() > 0.05 {
                    assert_eq!(a.signum(), b.signum(), "probe {probe:?}: {a} vs {b}");
                    compared += 1;
                }
            }
        }
        assert!(compared > 60);
    }

    #[test]
    fn objective_never_decreases_and_constraints_hold() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 30;
            let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
            let ys: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let p = SmoParams { c: 2.0, kernel: KernelSpec::Rbf { gamma: 0.7 }, seed, ..SmoParams::default() };
            let k = KernelMatrix::gram(&xs, &p.kernel);
            let sol = solve(&k, &ys, &p, true);
            assert!(sol.converged);
            assert!(sol.objective.windows(2).all(|w| w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs())));
            assert!(sol.alpha.iter().all(|&a| (0.0..=p.c).contains(&a)));
            let eq: f64 = sol.alpha.iter().zip(&ys).map(|(a, y)| a * y).sum();
            assert!(eq.abs() < 1e-6, "sum a y = {eq}");
            assert!(kkt_residuals(&sol, &k, &ys, p.c).iter().all(|&r| r <= p.tol + 1e-9));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] > 0.1 { 1.0 } else { -1.0 }).collect();
        let p = params(1.0, KernelSpec::Rbf { gamma: 1.0 });
        assert_eq!(train_binary(&xs, &ys, &p).unwrap(), train_binary(&xs, &ys, &p).unwrap());
    }

    #[test]
    fn errors() {
        let p = SmoParams::default();
        assert!(matches!(
            train_binary(&[vec![0.0], vec![1.0]], &[1.0, 1.0], &p),
            Err(SvmError::SingleClass)
        ));
        assert!(matches!(
            train_binary(&[vec![0.0], vec![1.0, 2.0]], &[1.0, -1.0], &p),
            Err(SvmError::DimensionMismatch { .. })
        ));
        assert!(train_binary(&[vec![0.0], vec![1.0]], &[1.0, 0.0], &p).is_err());
        assert!(SmoParams { c: 0.0, ..p }.validate().is_err());
        let m = train_binary(&[vec![0.0], vec![1.0]], &[-1.0, 1.0], &p).unwrap();
        assert!(matches!(decision_value(&m, &[1.0, 1.0]), Err(SvmError::DimensionMismatch { .. })));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        let ys: Vec<f64> = (0..60).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let tight = SmoParams { max_passes: 1, c: 100.0, ..p };
        match train_binary(&xs, &ys, &tight) {
            Err(SvmError::NoConvergence { passes: 1, model }) => assert!(!model.converged),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
