//! Memory quality measures: relearn accuracy and class-count balance.

use thiserror::Error;

use crate::bayes::{BayesError, FeatureVector, PosteriorState};
use crate::linalg;
use crate::memory::MemoryItem;
use crate::streams::Dataset;

mod gp;

pub use gp::{gp_curves, gp_toy, write_gp_curves, GpCurvePoint, GpToyConfig, GpToyReport, ProbeStats};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("cannot fit a classifier on an empty buffer")]
    EmptyBuffer,
    #[error("model expects {expected} input features, test set has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("kernel matrix is not positive definite even after adding jitter {jitter:e}")]
    Conditioning { jitter: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("curve output failed: {0}")]
    Output(String),
    #[error(transparent)]
    Bayes(#[from] BayesError),
}

/// Linear classifier on normalised features: predicts `argmax_k hᵀW_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Row-major `(d0 + 1) × K`.
    weights: Vec<f64>,
    dim: usize,
    n_classes: usize,
}

impl LinearModel {
    pub fn from_weights(weights: Vec<f64>, dim: usize, n_classes: usize) -> Self {
        assert_eq!(weights.len(), dim * n_classes, "weight matrix shape");
        Self { weights, dim, n_classes }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Class scores `hᵀW` for a normalised feature.
    pub fn scores(&self, h: &FeatureVector) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes];
        linalg::transpose_matvec(&self.weights, self.n_classes, h.as_slice(), &mut out);
        out
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn predict(&self, h: &FeatureVector) -> usize {
        let scores = self.scores(h);
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = k;
            }
        }
        best
    }
}

/// Ridge one-hot regression `(HᵀH + cI)W = HᵀŶ` over the buffer.
pub fn relearn_fit(buffer: &[MemoryItem], jitter: f64) -> Result<LinearModel, EvalError> {
    let first = buffer.first().ok_or(EvalError::EmptyBuffer)?;
    let dim = first.feature.dim();
    let n_classes = first.one_hot.n_classes();
    // σ only scales predictive variances, which the fit does not use.
    let posterior = PosteriorState::rebuild(
        dim - 1,
        n_classes,
        buffer.iter().map(|m| (&m.feature, &m.one_hot)),
        1.0,
        jitter,
    )?;
    Ok(LinearModel::from_weights(posterior.posterior_mean(), dim, n_classes))
}

/// Fraction of `test` rows whose predicted class equals the label. Features
/// pass through `transform` (e.g. the current drift map) before scoring.
pub fn relearn_accuracy_with<F>(model: &LinearModel, test: &Dataset, mut transform: F) -> Result<f64, EvalError>
where
    F: FnMut(Vec<f64>) -> Vec<f64>,
{
    if test.d0() + 1 != model.dim() {
        return Err(EvalError::DimensionMismatch { expected: model.dim() - 1, actual: test.d0() });
    }
    let mut correct = 0usize;
    for i in 0..test.len() {
        let h = FeatureVector::normalize(&transform(test.row_f64(i)))?;
        if model.predict(&h) == test.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

pub fn relearn_accuracy(model: &LinearModel, test: &Dataset) -> Result<f64, EvalError> {
    relearn_accuracy_with(model, test, |x| x)
}

/// Population variance of per-class counts: `(1/K)Σ M_k² − ((1/K)Σ M_k)²`.
pub fn class_variance(counts: &[usize]) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    let k = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / k;
    // Centred form of the same quantity; exact zero for equal counts.
    counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / k
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub relearn_accuracy: f64,
    pub class_variance: f64,
    /// `(batch iteration, reservoir count n)` after each batch.
    pub reservoir_count_trace: Vec<(usize, u64)>,
    /// Selection and scoring time only.
    pub wall_ms: f64,
    pub final_class_counts: Vec<usize>,
}
