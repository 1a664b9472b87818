//! Datasets and the non-stationary task streams built from them.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

mod format;
mod schedule;
mod synth;

pub use format::{load_binary, load_csv, save_binary, save_csv, BINARY_MAGIC, HEADER_LEN};
pub use schedule::{feature_drift, feature_drift_inverse, make_task_stream, Batch, StreamConfig, StreamPoint, TaskStream};
pub use synth::{synth_gaussian_mixture, GaussianMixture, SyntheticData};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic bytes {found:02x?} at offset 0 (expected \"MSL1\")")]
    BadMagic { found: Vec<u8> },
    #[error("malformed header at byte {offset}: {message}")]
    Header { offset: u64, message: String },
    #[error("dataset declares no rows")]
    Empty,
    #[error("size mismatch: header implies {expected} bytes but found {actual} (body ends at byte {actual})")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("label {label} at byte {offset} (row {row}) is out of range for {n_classes} classes")]
    LabelOutOfRange { offset: u64, row: usize, label: u64, n_classes: usize },
    #[error("non-finite feature at byte {offset} (row {row}, column {column})")]
    NonFinite { offset: u64, row: usize, column: usize },
    #[error("csv error at byte {offset}: {message}")]
    Csv { offset: u64, message: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid stream configuration: {0}")]
    InvalidConfig(String),
}

/// Immutable labelled feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f32>,
    labels: Vec<u32>,
    d0: usize,
    n_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f32>, labels: Vec<u32>, d0: usize, n_classes: usize) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::Empty);
        }
        if d0 == 0 || n_classes == 0 {
            return Err(DataError::Invalid("feature dimension and class count must be positive".into()));
        }
        if features.len() != labels.len() * d0 {
            return Err(DataError::Invalid(format!(
                "{} feature values for {} rows of width {d0}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(row) = labels.iter().position(|&l| l as usize >= n_classes) {
            return Err(DataError::Invalid(format!("row {row} has label {} ≥ {n_classes}", labels[row])));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!("non-finite feature at row {}, column {}", i / d0, i % d0)));
        }
        Ok(Self { features, labels, d0, n_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn d0(&self) -> usize {
        self.d0
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.d0..(i + 1) * self.d0]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    /// Rows whose label is in `classes`, in dataset order.
    pub fn indices_of(&self, classes: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|&i| classes.contains(&self.label(i))).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Self, DataError> {
        let mut features = Vec::with_capacity(rows.len() * self.d0);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Self::new(features, labels, self.d0, self.n_classes)
    }

    /// Stratified split: roughly `fraction` of every class goes to the second
    /// dataset.
    pub fn split_holdout(&self, fraction: f64, seed: u64) -> Result<(Self, Self), DataError> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(DataError::Invalid(format!("holdout fraction must be in (0, 1), got {fraction}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for k in 0..self.n_classes {
            let mut rows = self.indices_of(&[k]);
            rows.shuffle(&mut rng);
            let n_test = ((rows.len() as f64) * fraction).round() as usize;
            test.extend_from_slice(&rows[..n_test]);
            train.extend_from_slice(&rows[n_test..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train)?, self.subset(&test)?))
    }
}
