//! Reservoir sampling and its weighted and class-balanced variants.

use rand::{Rng, RngCore};

use super::{Admission, BatchOutcome, Selector, SelectorError, SelectorKind};
use crate::memory::{Memory, MemoryError, MemoryItem};

/// Number of points that have been offered to a reservoir.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ReservoirCount(pub u64);

/// One step of classic reservoir sampling. The count advances whatever the
/// outcome.
pub fn rs_observe<R: Rng + ?Sized>(
    memory: &mut Memory,
    count: &mut ReservoirCount,
    item: MemoryItem,
    rng: &mut R,
) -> Result<Admission, MemoryError> {
    let admission = if !memory.is_full() {
        memory.insert(item)?;
        Admission::Inserted
    } else {
        let slot = rng.random_range(0..=count.0);
        if slot < memory.budget() as u64 {
            Admission::Replaced(memory.replace(slot as usize, item)?)
        } else {
            Admission::Rejected
        }
    };
    count.0 += 1;
    Ok(admission)
}

/// One step of weighted reservoir sampling with accumulated score `wbar`.
pub fn wrs_observe<R: Rng + ?Sized>(
    memory: &mut Memory,
    wbar: &mut f64,
    item: MemoryItem,
    weight: f64,
    rng: &mut R,
) -> Result<Admission, SelectorError> {
    if !(weight >= 0.0) || !weight.is_finite() {
        return Err(SelectorError::InvalidWeight(weight));
    }
    *wbar += weight;
    if !memory.is_full() {
        memory.insert(item)?;
        return Ok(Admission::Inserted);
    }
    let budget = memory.budget();
    let w_hat = if *wbar > 0.0 { (weight / *wbar).min(1.0 / budget as f64) } else { 0.0 };
    // Categorical over [ŵ, …, ŵ, 1 − Mŵ] by inversion.
    let u: f64 = rng.random();
    if w_hat > 0.0 && u < budget as f64 * w_hat {
        let slot = ((u / w_hat) as usize).min(budget - 1);
        Ok(Admission::Replaced(memory.replace(slot, item)?))
    } else {
        Ok(Admission::Rejected)
    }
}

/// Total output-space Hessian `1 − Σ p_k²` of a predictive distribution.
pub fn hessian_weight(p: &[f64]) -> Result<f64, SelectorError> {
    if p.is_empty() || p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(SelectorError::InvalidProbabilities(format!("{p:?}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(SelectorError::InvalidProbabilities(format!("entries sum to {total}")));
    }
    Ok(1.0 - p.iter().map(|v| v * v).sum::<f64>())
}

/// Numerically stable softmax.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// One step of class-balanced reservoir sampling. `counts[k]` is the number of
/// class-`k` points seen so far.
pub fn cbrs_observe<R: Rng + ?Sized>(
    memory: &mut Memory,
    counts: &mut [ReservoirCount],
    item: MemoryItem,
    rng: &mut R,
) -> Result<Admission, MemoryError> {
    let label = item.label;
    if !memory.is_full() {
        memory.insert(item)?;
        counts[label].0 += 1;
        return Ok(Admission::Inserted);
    }
    let stored = memory.class_counts();
    let largest = stored
        .iter()
        .enumerate()
        .fold(0, |best, (k, &c)| if c > stored[best] { k } else { best });
    let admission = if stored[largest] > stored[label] {
        let pick = rng.random_range(0..stored[largest]);
        let index = nth_of_class(memory, largest, pick);
        Admission::Replaced(memory.replace(index, item)?)
    } else {
        let slot = rng.random_range(0..=counts[label].0);
        if slot < stored[label] as u64 {
            let index = nth_of_class(memory, label, slot as usize);
            Admission::Replaced(memory.replace(index, item)?)
        } else {
            Admission::Rejected
        }
    };
    counts[label].0 += 1;
    Ok(admission)
}

fn nth_of_class(memory: &Memory, class: usize, n: usize) -> usize {
    memory
        .items()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.label == class)
        .nth(n)
        .map(|(i, _)| i)
        .expect("class count out of sync with buffer")
}

#[derive(Debug, Clone, Default)]
pub struct ReservoirSampler {
    count: ReservoirCount,
}

impl ReservoirSampler {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Selector for ReservoirSampler {
    fn kind(&self) -> SelectorKind {
        SelectorKind::Rs
    }

    fn observe_batch(
        &mut self,
        memory: &mut Memory,
        batch: Vec<MemoryItem>,
        rng: &mut dyn RngCore,
    ) -> Result<BatchOutcome, SelectorError> {
        let mut outcome = BatchOutcome::default();
        for item in batch {
            outcome.considered += 1;
            outcome.record(&rs_observe(memory, &mut self.count, item, rng)?);
        }
        Ok(outcome)
    }

    fn reservoir_count(&self) -> u64 {
        self.count.0
    }
}

/// Weighted reservoir sampling with the output-space Hessian of a softmax
/// over the scorer's predictive means as the weight.
#[derive(Debug, Clone, Default)]
pub struct HessianWeightedSampler {
    wbar: f64,
    seen: u64,
}

impl HessianWeightedSampler {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Selector for HessianWeightedSampler {
    fn kind(&self) -> SelectorKind {
        SelectorKind::WrsHessian
    }

    fn observe_batch(
        &mut self,
        memory: &mut Memory,
        batch: Vec<MemoryItem>,
        rng: &mut dyn RngCore,
    ) -> Result<BatchOutcome, SelectorError> {
        let mut outcome = BatchOutcome::default();
        for item in batch {
            let p = softmax(&memory.posterior().predictive(&item.feature).means);
            let weight = hessian_weight(&p)?;
            outcome.considered += 1;
            self.seen += 1;
            outcome.record(&wrs_observe(memory, &mut self.wbar, item, weight, rng)?);
        }
        Ok(outcome)
    }

    fn reservoir_count(&self) -> u64 {
        self.seen
    }
}

#[derive(Debug, Clone)]
pub struct ClassBalancedSampler {
    counts: Vec<ReservoirCount>,
}

impl ClassBalancedSampler {
    pub fn new(n_classes: usize) -> Self {
        Self { counts: vec![ReservoirCount::default(); n_classes] }
    }

    pub fn class_counts(&self) -> &[ReservoirCount] {
        &self.counts
    }
}

impl Selector for ClassBalancedSampler {
    fn kind(&self) -> SelectorKind {
        SelectorKind::Cbrs
    }

    fn observe_batch(
        &mut self,
        memory: &mut Memory,
        batch: Vec<MemoryItem>,
        rng: &mut dyn RngCore,
    ) -> Result<BatchOutcome, SelectorError> {
        let mut outcome = BatchOutcome::default();
        for item in batch {
            outcome.considered += 1;
            outcome.record(&cbrs_observe(memory, &mut self.counts, item, rng)?);
        }
        Ok(outcome)
    }

    fn reservoir_count(&self) -> u64 {
        self.counts.iter().map(|c| c.0).sum()
    }
}
