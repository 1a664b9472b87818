//! Task-incremental stream scheduling and smooth feature drift.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset};
use crate::seeded_rng;

/// Sub-stream of the run seed used for per-epoch shuffles.
pub const SHUFFLE_STREAM: u64 = 0;

/// Amplitude of the log-scale oscillation applied by [`feature_drift`].
pub const DRIFT_LOG_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    /// Disjoint class groups, one per task, in presentation order.
    pub task_classes: Vec<Vec<usize>>,
    pub base_epochs: usize,
    /// Epoch multiplier for the starred task.
    pub imbalance: usize,
    pub starred_task: Option<usize>,
    pub batch_size: usize,
    pub seed: u64,
    pub drift_rate: f64,
}

impl StreamConfig {
    /// Splits classes `0..n_classes` into `n_tasks` contiguous groups
    /// (earlier groups take the remainder). Other fields get defaults:
    /// one epoch, no imbalance, batches of 10, seed 0, no drift.
    pub fn contiguous(n_classes: usize, n_tasks: usize) -> Result<Self, DataError> {
        if n_tasks == 0 || n_tasks > n_classes {
            return Err(DataError::InvalidConfig(format!("cannot split {n_classes} classes into {n_tasks} tasks")));
        }
        let base = n_classes / n_tasks;
        let extra = n_classes % n_tasks;
        let mut next = 0;
        let task_classes = (0..n_tasks)
            .map(|t| {
                let size = base + usize::from(t < extra);
                let group = (next..next + size).collect();
                next += size;
                group
            })
            .collect();
        Ok(Self {
            task_classes,
            base_epochs: 1,
            imbalance: 1,
            starred_task: None,
            batch_size: 10,
            seed: 0,
            drift_rate: 0.0,
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.task_classes.len()
    }

    pub fn epochs_for(&self, task: usize) -> usize {
        if self.starred_task == Some(task) {
            self.base_epochs * self.imbalance
        } else {
            self.base_epochs
        }
    }

    pub fn validate(&self, n_classes: usize) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::InvalidConfig(msg));
        if self.task_classes.is_empty() {
            return bad("at least one task is required".into());
        }
        let mut seen = vec![false; n_classes];
        for (t, group) in self.task_classes.iter().enumerate() {
            if group.is_empty() {
                return bad(format!("task {t} has no classes"));
            }
            for &c in group {
                if c >= n_classes {
                    return bad(format!("task {t} names class {c} but the dataset has {n_classes}"));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return bad(format!("class {c} appears in more than one task"));
                }
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return bad(format!("class {c} is not assigned to any task"));
        }
        if self.base_epochs == 0 {
            return bad("base epochs must be ≥ 1".into());
        }
        if self.imbalance == 0 {
            return bad("imbalance must be ≥ 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be ≥ 1".into());
        }
        if let Some(s) = self.starred_task {
            if s >= self.n_tasks() {
                return bad(format!("starred task {s} out of range for {} tasks", self.n_tasks()));
            }
        }
        if !(self.drift_rate >= 0.0 && self.drift_rate.is_finite()) {
            return bad(format!("drift rate must be finite and ≥ 0, got {}", self.drift_rate));
        }
        Ok(())
    }

    /// Number of batches the stream will yield over `dataset`.
    pub fn total_batches(&self, dataset: &Dataset) -> usize {
        self.task_classes
            .iter()
            .enumerate()
            .map(|(t, classes)| {
                let rows = dataset.indices_of(classes).len();
                self.epochs_for(t) * rows.div_ceil(self.batch_size)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamPoint {
    /// Position in the stream; unique across the whole run.
    pub id: u64,
    /// Dataset row.
    pub source: usize,
    pub raw_feature: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub items: Vec<StreamPoint>,
    pub task_id: usize,
    pub epoch_id: usize,
    /// Zero-based batch index within the stream.
    pub iteration: usize,
}

/// Iterator over the batches of a task stream.
#[derive(Debug, Clone)]
pub struct TaskStream<'a> {
    dataset: &'a Dataset,
    config: StreamConfig,
    task_rows: Vec<Vec<usize>>,
    rng: ChaCha8Rng,
    task: usize,
    epoch: usize,
    order: Vec<usize>,
    pos: usize,
    next_id: u64,
    iteration: usize,
}

pub fn make_task_stream<'a>(dataset: &'a Dataset, config: &StreamConfig) -> Result<TaskStream<'a>, DataError> {
    config.validate(dataset.n_classes())?;
    let task_rows: Vec<Vec<usize>> = config.task_classes.iter().map(|c| dataset.indices_of(c)).collect();
    let mut stream = TaskStream {
        dataset,
        config: config.clone(),
        task_rows,
        rng: seeded_rng(config.seed, SHUFFLE_STREAM),
        task: 0,
        epoch: 0,
        order: Vec::new(),
        pos: 0,
        next_id: 0,
        iteration: 0,
    };
    stream.start_epoch();
    Ok(stream)
}

impl TaskStream<'_> {
    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    fn start_epoch(&mut self) {
        self.order = self.task_rows[self.task].clone();
        self.order.shuffle(&mut self.rng);
        self.pos = 0;
    }

    /// Moves past exhausted epochs and tasks; false once the stream is done.
    fn advance(&mut self) -> bool {
        while self.pos >= self.order.len() {
            self.epoch += 1;
            if self.epoch >= self.config.epochs_for(self.task) {
                self.epoch = 0;
                self.task += 1;
                if self.task >= self.config.n_tasks() {
                    return false;
                }
            }
            self.start_epoch();
        }
        true
    }
}

impl Iterator for TaskStream<'_> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.task >= self.config.n_tasks() || !self.advance() {
            return None;
        }
        let end = (self.pos + self.config.batch_size).min(self.order.len());
        let items = self.order[self.pos..end]
            .iter()
            .map(|&row| {
                let id = self.next_id;
                self.next_id += 1;
                StreamPoint { id, source: row, raw_feature: self.dataset.row_f64(row), label: self.dataset.label(row) }
            })
            .collect();
        self.pos = end;
        let batch = Batch { items, task_id: self.task, epoch_id: self.epoch, iteration: self.iteration };
        self.iteration += 1;
        Some(batch)
    }
}

fn rotate_pairs(x: &mut [f64], angle: f64) {
    let (s, c) = angle.sin_cos();
    for pair in x.chunks_exact_mut(2) {
        let (a, b) = (pair[0], pair[1]);
        pair[0] = c * a - s * b;
        pair[1] = s * a + c * b;
    }
}

fn drift_scale(angle: f64) -> f64 {
    (DRIFT_LOG_SCALE * angle.sin()).exp()
}

/// Rotates consecutive coordinate pairs by θ = t·rate and scales by
/// exp(0.1·sin θ). Norms therefore stay within [e^−0.1, e^0.1] of the input.
pub fn feature_drift(raw_feature: &[f64], t: usize, drift_rate: f64) -> Vec<f64> {
    let angle = t as f64 * drift_rate;
    let mut out = raw_feature.to_vec();
    if angle == 0.0 {
        return out;
    }
    rotate_pairs(&mut out, angle);
    let scale = drift_scale(angle);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Exact inverse of [`feature_drift`] for the same `t` and rate.
pub fn feature_drift_inverse(drifted: &[f64], t: usize, drift_rate: f64) -> Vec<f64> {
    let angle = t as f64 * drift_rate;
    let mut out = drifted.to_vec();
    if angle == 0.0 {
        return out;
    }
    let scale = drift_scale(angle);
    out.iter_mut().for_each(|v| *v /= scale);
    rotate_pairs(&mut out, -angle);
    out
}
