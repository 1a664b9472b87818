//! Budgeted memory buffer kept in lock-step with the scorer's posterior.

use thiserror::Error;

use crate::bayes::{BayesError, FeatureVector, OneHotTarget, PosteriorState};

/// Default number of rank-one operations between stability rebuilds.
pub const DEFAULT_REBUILD_PERIOD: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MemoryError {
    #[error("memory is full ({budget} items); use replace")]
    CapacityExceeded { budget: usize },
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("item {id}: one-hot target does not encode label {label}")]
    TargetMismatch { id: u64, label: usize },
    #[error("item {id}: stored feature does not match its raw feature")]
    FeatureMismatch { id: u64 },
    #[error("item {id} is already in memory")]
    DuplicateId { id: u64 },
    #[error(transparent)]
    Bayes(#[from] BayesError),
}

/// One stored observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryItem {
    /// Position in the stream; unique within a buffer.
    pub id: u64,
    /// Row of the source dataset this observation was drawn from.
    pub source: usize,
    pub raw_feature: Vec<f64>,
    pub feature: FeatureVector,
    pub label: usize,
    pub one_hot: OneHotTarget,
    /// Carried for replay consumers; selection never reads it.
    pub logits: Option<Vec<f64>>,
}

impl MemoryItem {
    pub fn new(id: u64, source: usize, raw_feature: Vec<f64>, label: usize, n_classes: usize) -> Result<Self, BayesError> {
        let feature = FeatureVector::normalize(&raw_feature)?;
        let one_hot = OneHotTarget::new(label, n_classes)?;
        Ok(Self { id, source, raw_feature, feature, label, one_hot, logits: None })
    }

    fn validate(&self) -> Result<(), MemoryError> {
        if self.one_hot.label() != self.label {
            return Err(MemoryError::TargetMismatch { id: self.id, label: self.label });
        }
        if self.feature.dim() != self.raw_feature.len() + 1 {
            return Err(MemoryError::FeatureMismatch { id: self.id });
        }
        Ok(())
    }
}

/// Buffer contents plus the posterior over them.
#[derive(Debug, Clone)]
pub struct Memory {
    items: Vec<MemoryItem>,
    budget: usize,
    posterior: PosteriorState,
    rebuild_period: usize,
    rebuilds: usize,
}

impl Memory {
    pub fn new(budget: usize, prior: PosteriorState) -> Result<Self, MemoryError> {
        Self::with_rebuild_period(budget, prior, DEFAULT_REBUILD_PERIOD)
    }

    /// `rebuild_period = 0` disables periodic rebuilds.
    pub fn with_rebuild_period(budget: usize, prior: PosteriorState, rebuild_period: usize) -> Result<Self, MemoryError> {
        if budget == 0 {
            return Err(MemoryError::ZeroBudget);
        }
        if prior.count() != 0 {
            return Err(BayesError::InvalidConfig("memory must start from an empty posterior".into()).into());
        }
        Ok(Self { items: Vec::with_capacity(budget), budget, posterior: prior, rebuild_period, rebuilds: 0 })
    }

    pub fn items(&self) -> &[MemoryItem] {
        &self.items
    }

    pub fn posterior(&self) -> &PosteriorState {
        &self.posterior
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.budget
    }

    pub fn n_classes(&self) -> usize {
        self.posterior.n_outputs()
    }

    /// Number of full rebuilds performed so far (periodic, fallback or refresh).
    pub fn rebuild_count(&self) -> usize {
        self.rebuilds
    }

    fn check_item(&self, item: &MemoryItem, skip: Option<usize>) -> Result<(), MemoryError> {
        item.validate()?;
        if item.feature.dim() != self.posterior.dim() {
            return Err(BayesError::DimensionMismatch { expected: self.posterior.dim(), actual: item.feature.dim() }.into());
        }
        if item.one_hot.n_classes() != self.posterior.n_outputs() {
            return Err(BayesError::DimensionMismatch {
                expected: self.posterior.n_outputs(),
                actual: item.one_hot.n_classes(),
            }
            .into());
        }
        if self.items.iter().enumerate().any(|(i, m)| Some(i) != skip && m.id == item.id) {
            return Err(MemoryError::DuplicateId { id: item.id });
        }
        Ok(())
    }

    pub fn insert(&mut self, item: MemoryItem) -> Result<(), MemoryError> {
        if self.is_full() {
            return Err(MemoryError::CapacityExceeded { budget: self.budget });
        }
        self.check_item(&item, None)?;
        self.posterior.add(&item.feature, &item.one_hot);
        self.items.push(item);
        self.maybe_rebuild()
    }

    /// Swaps the item at `index` for `item` with one downdate and one update,
    /// returning the evicted item.
    pub fn replace(&mut self, index: usize, item: MemoryItem) -> Result<MemoryItem, MemoryError> {
        if index >= self.items.len() {
            return Err(MemoryError::IndexOutOfRange { index, len: self.items.len() });
        }
        self.check_item(&item, Some(index))?;
        let evicted = std::mem::replace(&mut self.items[index], item);
        match self.posterior.remove(&evicted.feature, &evicted.one_hot) {
            Ok(()) => {
                let new = &self.items[index];
                self.posterior.add(&new.feature, &new.one_hot);
                self.maybe_rebuild()?;
            }
            Err(BayesError::DegradedConditioning { .. }) => self.rebuild()?,
            Err(e) => return Err(e.into()),
        }
        Ok(evicted)
    }

    pub fn remove(&mut self, index: usize) -> Result<MemoryItem, MemoryError> {
        if index >= self.items.len() {
            return Err(MemoryError::IndexOutOfRange { index, len: self.items.len() });
        }
        let evicted = self.items.remove(index);
        match self.posterior.remove(&evicted.feature, &evicted.one_hot) {
            Ok(()) => self.maybe_rebuild()?,
            Err(BayesError::DegradedConditioning { .. }) => self.rebuild()?,
            Err(e) => return Err(e.into()),
        }
        Ok(evicted)
    }

    /// Re-maps every stored raw feature and rebuilds the posterior.
    pub fn refresh_features<F>(&mut self, mut feature_map: F) -> Result<(), MemoryError>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let d0 = self.posterior.dim() - 1;
        let mut refreshed = Vec::with_capacity(self.items.len());
        for item in &self.items {
            let raw = feature_map(&item.raw_feature);
            if raw.len() != d0 {
                return Err(BayesError::DimensionMismatch { expected: d0, actual: raw.len() }.into());
            }
            let feature = FeatureVector::normalize(&raw)?;
            refreshed.push((raw, feature));
        }
        for (item, (raw, feature)) in self.items.iter_mut().zip(refreshed) {
            item.raw_feature = raw;
            item.feature = feature;
        }
        self.rebuild()
    }

    /// Recomputes the posterior from the buffer contents.
    pub fn rebuild(&mut self) -> Result<(), MemoryError> {
        self.posterior = self.rebuilt_posterior()?;
        self.posterior.mark_rebuilt();
        self.rebuilds += 1;
        Ok(())
    }

    /// A fresh factorised posterior over the current contents, leaving the
    /// maintained one untouched.
    pub fn rebuilt_posterior(&self) -> Result<PosteriorState, BayesError> {
        PosteriorState::rebuild(
            self.posterior.dim() - 1,
            self.posterior.n_outputs(),
            self.items.iter().map(|m| (&m.feature, &m.one_hot)),
            self.posterior.sigma(),
            self.posterior.jitter(),
        )
    }

    fn maybe_rebuild(&mut self) -> Result<(), MemoryError> {
        if self.rebuild_period > 0 && self.posterior.ops_since_rebuild() >= self.rebuild_period {
            self.rebuild()?;
        }
        Ok(())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.items, self.n_classes())
    }
}

/// Per-class item counts.
pub fn class_counts(items: &[MemoryItem], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for item in items {
        counts[item.label] += 1;
    }
    counts
}
