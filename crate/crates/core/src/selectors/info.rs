//! Selectors driven by the information criteria: InfoRS, InfoGS and the
//! InfoGS-RS ablation.

use std::collections::VecDeque;

use rand::{Rng, RngCore};

use super::moments::RunningMoments;
use super::reservoir::{rs_observe, ReservoirCount};
use super::{Admission, BatchOutcome, Selector, SelectorError, SelectorKind, SelectorParams};
use crate::bayes::{BayesError, PointScores, PosteriorState};
use crate::memory::{Memory, MemoryItem};

/// Reservoir sampling restricted to points whose criterion clears the running
/// `mean + γ_i·std` threshold.
#[derive(Debug, Clone)]
pub struct InfoReservoirSampler {
    params: SelectorParams,
    moments: RunningMoments,
    count: ReservoirCount,
}

impl InfoReservoirSampler {
    pub fn new(params: SelectorParams) -> Self {
        Self { params, moments: RunningMoments::new(), count: ReservoirCount::default() }
    }

    pub fn moments(&self) -> &RunningMoments {
        &self.moments
    }
}

/// Processes one batch in order; see [`InfoReservoirSampler`].
pub fn infors_observe_batch<R: Rng + ?Sized>(
    memory: &mut Memory,
    moments: &mut RunningMoments,
    count: &mut ReservoirCount,
    batch: Vec<MemoryItem>,
    params: &SelectorParams,
    rng: &mut R,
) -> Result<BatchOutcome, SelectorError> {
    let mut outcome = BatchOutcome::default();
    let mut pending: VecDeque<MemoryItem> = batch.into();
    // Scores of the pending items against the current memory, recomputed
    // whenever the memory changes.
    let mut values = criterion_values(memory.posterior(), &pending, params).into_iter();
    while let Some(item) = pending.pop_front() {
        let value = values.next().expect("one value per pending item");
        let mut changed = false;
        if !memory.is_full() || value >= moments.threshold(params.gamma_i) {
            outcome.considered += 1;
            let admission = rs_observe(memory, count, item, rng)?;
            changed = !matches!(admission, Admission::Rejected);
            outcome.record(&admission);
        }
        moments.update(value);
        if changed && !pending.is_empty() {
            values = criterion_values(memory.posterior(), &pending, params).into_iter();
        }
    }
    Ok(outcome)
}

fn criterion_values(posterior: &PosteriorState, items: &VecDeque<MemoryItem>, params: &SelectorParams) -> Vec<f64> {
    let points: Vec<_> = items.iter().map(|m| (&m.feature, &m.one_hot)).collect();
    posterior.score_many(&points).iter().map(|s| params.criterion_value(s)).collect()
}

impl Selector for InfoReservoirSampler {
    fn kind(&self) -> SelectorKind {
        SelectorKind::InfoRs
    }

    fn observe_batch(
        &mut self,
        memory: &mut Memory,
        batch: Vec<MemoryItem>,
        rng: &mut dyn RngCore,
    ) -> Result<BatchOutcome, SelectorError> {
        infors_observe_batch(memory, &mut self.moments, &mut self.count, batch, &self.params, rng)
    }

    fn reservoir_count(&self) -> u64 {
        self.count.0
    }
}

/// Greedy selection: swap the least informative memory point for the most
/// informative learnable batch point while the improvement clears the
/// threshold. With `reservoir_gate` set, each swap additionally has to win a
/// reservoir-sampling draw (the InfoGS-RS ablation).
#[derive(Debug, Clone)]
pub struct InfoGreedySelector {
    params: SelectorParams,
    moments_i: RunningMoments,
    moments_l: RunningMoments,
    reservoir_gate: Option<ReservoirCount>,
    admitted: u64,
}

impl InfoGreedySelector {
    pub fn new(params: SelectorParams) -> Self {
        Self {
            params,
            moments_i: RunningMoments::new(),
            moments_l: RunningMoments::new(),
            reservoir_gate: None,
            admitted: 0,
        }
    }

    pub fn with_reservoir_gate(params: SelectorParams) -> Self {
        Self { reservoir_gate: Some(ReservoirCount::default()), ..Self::new(params) }
    }

    pub fn moments(&self) -> (&RunningMoments, &RunningMoments) {
        (&self.moments_i, &self.moments_l)
    }
}

impl Selector for InfoGreedySelector {
    fn kind(&self) -> SelectorKind {
        if self.reservoir_gate.is_some() {
            SelectorKind::InfoGsRs
        } else {
            SelectorKind::InfoGs
        }
    }

    fn observe_batch(
        &mut self,
        memory: &mut Memory,
        batch: Vec<MemoryItem>,
        rng: &mut dyn RngCore,
    ) -> Result<BatchOutcome, SelectorError> {
        let params = self.params;
        // Moment updates use every batch point scored against the memory as
        // it was when the batch arrived.
        let arrival: Vec<PointScores> = batch
            .iter()
            .map(|item| memory.posterior().score(&item.feature, &item.one_hot))
            .collect();
        let mut outcome = BatchOutcome::default();

        let mut pending = batch.into_iter();
        let mut rest = Vec::new();
        for item in pending.by_ref() {
            if memory.is_full() {
                rest.push(item);
                break;
            }
            memory.insert(item)?;
            outcome.considered += 1;
            outcome.updates += 1;
            self.admitted += 1;
        }
        rest.extend(pending);

        let passes = rest.len();
        let mut pool: Vec<MemoryItem> = rest;
        for _ in 0..passes {
            if pool.is_empty() {
                break;
            }
            let learn_threshold = self.moments_l.threshold(params.gamma_l);
            let mut best: Option<(usize, f64, u64)> = None;
            for (i, item) in pool.iter().enumerate() {
                let scores = memory.posterior().score(&item.feature, &item.one_hot);
                if !(scores.learnability >= learn_threshold) {
                    continue;
                }
                let v = params.criterion_value(&scores);
                match best {
                    Some((_, bv, bid)) if bv > v || (bv == v && bid < item.id) => {}
                    _ => best = Some((i, v, item.id)),
                }
            }
            let Some((best_index, best_value, _)) = best else {
                break;
            };
            let newcomer = &pool[best_index];

            let (victim, victim_value) = least_informative(memory, newcomer, &params)?;
            if best_value < victim_value + self.moments_i.threshold(params.gamma_i) {
                break;
            }

            let newcomer = pool.remove(best_index);
            if let Some(gate) = self.reservoir_gate.as_mut() {
                let slot = rng.random_range(0..=gate.0);
                gate.0 += 1;
                if slot >= memory.budget() as u64 {
                    continue;
                }
            }
            outcome.considered += 1;
            outcome.record(&Admission::Replaced(memory.replace(victim, newcomer)?));
            self.admitted += 1;
        }

        for scores in &arrival {
            self.moments_i.update(params.criterion_value(scores));
            self.moments_l.update(scores.learnability);
        }
        Ok(outcome)
    }

    fn reservoir_count(&self) -> u64 {
        match self.reservoir_gate {
            Some(gate) => gate.0,
            None => self.admitted,
        }
    }
}

/// Index and leave-one-out criterion of the memory point that carries the
/// least information about `M ∪ {newcomer}` once removed. Ties go to the
/// lowest stream id.
fn least_informative(
    memory: &Memory,
    newcomer: &MemoryItem,
    params: &SelectorParams,
) -> Result<(usize, f64), SelectorError> {
    let plus = memory.posterior().with_added(&newcomer.feature, &newcomer.one_hot);
    let mut best: Option<(usize, f64, u64)> = None;
    for (index, member) in memory.items().iter().enumerate() {
        let scores = match plus.leave_one_out_scores(&member.feature, &member.one_hot) {
            Ok(scores) => scores,
            Err(BayesError::DegradedConditioning { .. }) => dense_leave_one_out(memory, newcomer, index)?,
            Err(e) => return Err(e.into()),
        };
        let value = params.criterion_value(&scores);
        match best {
            Some((_, bv, bid)) if bv < value || (bv == value && bid < member.id) => {}
            _ => best = Some((index, value, member.id)),
        }
    }
    best.map(|(i, v, _)| (i, v)).ok_or(SelectorError::EmptyMemory)
}

/// Scores of member `index` against a freshly factorised posterior over the
/// memory without it, plus the newcomer.
fn dense_leave_one_out(memory: &Memory, newcomer: &MemoryItem, index: usize) -> Result<PointScores, BayesError> {
    let prior = memory.posterior();
    let others = memory
        .items()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != index)
        .map(|(_, m)| m)
        .chain(std::iter::once(newcomer))
        .map(|m| (&m.feature, &m.one_hot));
    let reduced = PosteriorState::rebuild(prior.dim() - 1, prior.n_outputs(), others, prior.sigma(), prior.jitter())?;
    let member = &memory.items()[index];
    Ok(reduced.score(&member.feature, &member.one_hot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selectors::Criterion;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn memory(budget: usize, d0: usize, k: usize) -> Memory {
        Memory::new(budget, PosteriorState::with_jitter(d0, k, 0.3, 0.1).unwrap()).unwrap()
    }

    fn gaussian_item(id: u64, center: &[f64], label: usize, k: usize, rng: &mut ChaCha8Rng) -> MemoryItem {
        use rand_distr::{Distribution, StandardNormal};
        let raw: Vec<f64> = center
            .iter()
            .map(|c| c + 0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        MemoryItem::new(id, id as usize, raw, label, k).unwrap()
    }

    #[test]
    fn infors_admits_everything_below_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = memory(10, 3, 2);
        let params = SelectorParams { gamma_i: 1e6, ..SelectorParams::default() };
        let mut sel = InfoReservoirSampler::new(params);
        let batch: Vec<MemoryItem> = (0..10).map(|id| gaussian_item(id, &[1.0, 0.0, 0.0], 0, 2, &mut rng)).collect();
        let out = sel.observe_batch(&mut m, batch, &mut rng).unwrap();
        assert_eq!(out.updates, 10);
        assert_eq!(m.len(), 10);
        assert_eq!(sel.moments().count(), 10);
    }

    #[test]
    fn infogs_inserts_without_scoring_below_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = memory(8, 3, 2);
        let mut sel = InfoGreedySelector::new(SelectorParams::default());
        let batch: Vec<MemoryItem> = (0..8).map(|id| gaussian_item(id, &[0.0, 1.0, 0.0], 1, 2, &mut rng)).collect();
        let out = sel.observe_batch(&mut m, batch, &mut rng).unwrap();
        assert_eq!(out.updates, 8);
        assert_eq!(m.items().iter().map(|i| i.id).collect::<Vec<_>>(), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn infogs_rejects_duplicates_of_memory() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let budget = 10;
        let mut m = memory(budget, 3, 2);
        let params = SelectorParams { eta: 1.0, gamma_i: 0.0, gamma_l: f64::NEG_INFINITY, criterion: Criterion::Mic };
        let mut sel = InfoGreedySelector::new(params);
        let base: Vec<MemoryItem> = (0..budget as u64)
            .map(|id| gaussian_item(id, &[(id % 2) as f64 * 3.0, 0.0, 1.0], (id % 2) as usize, 2, &mut rng))
            .collect();
        sel.observe_batch(&mut m, base.clone(), &mut rng).unwrap();
        // Warm the moments with a few fresh batches.
        let mut next_id = 100;
        for _ in 0..5 {
            let batch: Vec<MemoryItem> = (0..budget)
                .map(|i| {
                    next_id += 1;
                    gaussian_item(next_id, &[(i % 2) as f64 * 3.0, 0.0, 1.0], i % 2, 2, &mut rng)
                })
                .collect();
            sel.observe_batch(&mut m, batch, &mut rng).unwrap();
        }
        let stored: Vec<MemoryItem> = m.items().to_vec();
        for round in 0..5 {
            let dupes: Vec<MemoryItem> = stored
                .iter()
                .map(|s| MemoryItem { id: 10_000 + round * 100 + s.id, ..s.clone() })
                .collect();
            let out = sel.observe_batch(&mut m, dupes, &mut rng).unwrap();
            assert_eq!(out.updates, 0, "round {round} replaced a memory point with a duplicate");
        }
    }

    #[test]
    fn gated_greedy_matches_greedy_while_reservoir_is_young() {
        // The gate's draw over n + 1 slots always lands inside the budget
        // while n < M.
        let params = SelectorParams {
            eta: 1.0,
            gamma_i: f64::NEG_INFINITY,
            gamma_l: f64::NEG_INFINITY,
            criterion: Criterion::Mic,
        };
        let budget = 30;
        let mut data_rng = ChaCha8Rng::seed_from_u64(5);
        let mut rng_a = ChaCha8Rng::seed_from_u64(4);
        let mut rng_b = ChaCha8Rng::seed_from_u64(4);
        let mut ma = memory(budget, 3, 3);
        let mut mb = memory(budget, 3, 3);
        let mut greedy = InfoGreedySelector::new(params);
        let mut gated = InfoGreedySelector::with_reservoir_gate(params);
        let mut id = 0;
        let mut compared = 0;
        while gated.reservoir_count() + 8 <= budget as u64 {
            let batch: Vec<MemoryItem> = (0..8)
                .map(|_| {
                    id += 1;
                    let c = (id % 3) as f64;
                    gaussian_item(id, &[c, -c, 0.5 * c], (id % 3) as usize, 3, &mut data_rng)
                })
                .collect();
            greedy.observe_batch(&mut ma, batch.clone(), &mut rng_a).unwrap();
            gated.observe_batch(&mut mb, batch, &mut rng_b).unwrap();
            let ids = |m: &Memory| m.items().iter().map(|i| i.id).collect::<Vec<_>>();
            assert_eq!(ids(&ma), ids(&mb));
            compared += 1;
        }
        assert!(gated.reservoir_count() > 0 && compared > 4);
    }
}
