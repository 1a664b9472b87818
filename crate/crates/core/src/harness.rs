//! Drives one selector over a task stream and evaluates the final memory.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bayes::{BayesError, PosteriorState};
use crate::eval::{class_variance, relearn_accuracy_with, relearn_fit, EvalError, EvalReport};
use crate::memory::{Memory, MemoryError, MemoryItem, DEFAULT_REBUILD_PERIOD};
use crate::seeded_rng;
use crate::selectors::{BatchOutcome, SelectorError, SelectorKind, SelectorParams};
use crate::streams::{feature_drift, feature_drift_inverse, make_task_stream, Batch, DataError, Dataset, StreamConfig};

/// Sub-stream of the run seed used by the selector.
pub const SELECTOR_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub selector: SelectorKind,
    pub params: SelectorParams,
    pub budget: usize,
    pub sigma: f64,
    /// Ridge / prior precision ratio `c = σ²/σ_w²`.
    pub jitter: f64,
    pub rebuild_period: usize,
}

impl RunConfig {
    pub fn new(selector: SelectorKind, budget: usize) -> Self {
        Self {
            selector,
            params: SelectorParams::default(),
            budget,
            sigma: 0.3,
            jitter: 0.1,
            rebuild_period: DEFAULT_REBUILD_PERIOD,
        }
    }
}

/// State left after the whole stream has been consumed.
#[derive(Debug, Clone)]
pub struct SelectionRun {
    pub memory: Memory,
    pub reservoir_count_trace: Vec<(usize, u64)>,
    pub wall: Duration,
    /// Iteration of the last batch (the drift map in force at the end).
    pub last_iteration: usize,
}

/// Runs the selector over every batch. `on_batch` sees each batch after it
/// has been processed. Wall time covers drift refresh, feature
/// normalisation and selection.
pub fn run_selection<F>(
    train: &Dataset,
    stream: &StreamConfig,
    run: &RunConfig,
    mut on_batch: F,
) -> Result<SelectionRun, RunError>
where
    F: FnMut(&Batch, &Memory, &BatchOutcome),
{
    run.params.validate().map_err(RunError::InvalidConfig)?;
    if run.budget == 0 {
        return Err(MemoryError::ZeroBudget.into());
    }
    let k = train.n_classes();
    let prior = PosteriorState::with_jitter(train.d0(), k, run.sigma, run.jitter)?;
    let mut memory = Memory::with_rebuild_period(run.budget, prior, run.rebuild_period)?;
    let mut selector = run.selector.build(run.params, k);
    let mut rng = seeded_rng(stream.seed, SELECTOR_STREAM);
    let drift = stream.drift_rate;

    let mut wall = Duration::ZERO;
    let mut trace = Vec::new();
    let mut last_iteration = 0;
    for batch in make_task_stream(train, stream)? {
        let t = batch.iteration;
        let start = Instant::now();
        if drift > 0.0 && t > 0 && !memory.is_empty() {
            memory.refresh_features(|raw| feature_drift(&feature_drift_inverse(raw, t - 1, drift), t, drift))?;
        }
        let items = batch
            .items
            .iter()
            .map(|p| {
                let raw = if drift > 0.0 { feature_drift(&p.raw_feature, t, drift) } else { p.raw_feature.clone() };
                MemoryItem::new(p.id, p.source, raw, p.label, k)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let outcome = selector.observe_batch(&mut memory, items, &mut rng)?;
        wall += start.elapsed();
        trace.push((t, selector.reservoir_count()));
        last_iteration = t;
        on_batch(&batch, &memory, &outcome);
    }
    Ok(SelectionRun { memory, reservoir_count_trace: trace, wall, last_iteration })
}

/// Relearn accuracy on `test` (mapped through the final drift) plus
/// class-balance statistics of the memory.
pub fn evaluate(selection: &SelectionRun, test: &Dataset, stream: &StreamConfig, jitter: f64) -> Result<EvalReport, RunError> {
    let model = relearn_fit(selection.memory.items(), jitter)?;
    let (t, rate) = (selection.last_iteration, stream.drift_rate);
    let accuracy = relearn_accuracy_with(&model, test, |x| if rate > 0.0 { feature_drift(&x, t, rate) } else { x })?;
    let counts = selection.memory.class_counts();
    Ok(EvalReport {
        relearn_accuracy: accuracy,
        class_variance: class_variance(&counts),
        reservoir_count_trace: selection.reservoir_count_trace.clone(),
        wall_ms: selection.wall.as_secs_f64() * 1e3,
        final_class_counts: counts,
    })
}

pub fn run_and_evaluate(
    train: &Dataset,
    test: &Dataset,
    stream: &StreamConfig,
    run: &RunConfig,
) -> Result<(SelectionRun, EvalReport), RunError> {
    let selection = run_selection(train, stream, run, |_, _, _| {})?;
    let report = evaluate(&selection, test, stream, run.jitter)?;
    Ok((selection, report))
}
