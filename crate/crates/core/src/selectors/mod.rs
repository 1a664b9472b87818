//! Online memory selection strategies.
//!
//! Every selector consumes a stream batch by batch and edits a [`Memory`]
//! through its insert/replace operations, so the posterior always tracks the
//! buffer.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use thiserror::Error;

use crate::bayes::{BayesError, PointScores};
use crate::memory::{Memory, MemoryError, MemoryItem};

mod info;
mod moments;
mod reservoir;

pub use info::{infors_observe_batch, InfoGreedySelector, InfoReservoirSampler};
pub use moments::RunningMoments;
pub use reservoir::{
    cbrs_observe, hessian_weight, rs_observe, softmax, wrs_observe, ClassBalancedSampler, HessianWeightedSampler,
    ReservoirCount, ReservoirSampler,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectorError {
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("sampling weight must be finite and non-negative, got {0}")]
    InvalidWeight(f64),
    #[error("cannot pick an eviction candidate from an empty memory")]
    EmptyMemory,
}

impl From<BayesError> for SelectorError {
    fn from(e: BayesError) -> Self {
        SelectorError::Memory(MemoryError::Bayes(e))
    }
}

/// Which closed-form score ranks candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    #[default]
    Mic,
    /// Weighted information gain.
    Ig,
    /// Entropy reduction (target independent).
    Er,
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mic" => Ok(Criterion::Mic),
            "ig" => Ok(Criterion::Ig),
            "er" => Ok(Criterion::Er),
            other => Err(format!("unknown criterion '{other}' (expected mic, ig or er)")),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Mic => "mic",
            Criterion::Ig => "ig",
            Criterion::Er => "er",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorParams {
    /// Learnability ratio η ≥ 0.
    pub eta: f64,
    /// Information threshold ratio γ_i.
    pub gamma_i: f64,
    /// Learnability threshold ratio γ_l (greedy selectors only).
    pub gamma_l: f64,
    pub criterion: Criterion,
}

impl Default for SelectorParams {
    fn default() -> Self {
        Self { eta: 1.0, gamma_i: 0.0, gamma_l: 0.0, criterion: Criterion::Mic }
    }
}

impl SelectorParams {
    pub fn criterion_value(&self, scores: &PointScores) -> f64 {
        match self.criterion {
            Criterion::Mic => scores.mic(self.eta),
            Criterion::Ig => scores.info_gain(self.eta),
            Criterion::Er => scores.entropy_reduction,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(format!("eta must be finite and non-negative, got {}", self.eta));
        }
        if self.gamma_i.is_nan() || self.gamma_l.is_nan() {
            return Err("threshold ratios must not be NaN".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SelectorKind {
    Rs,
    WrsHessian,
    Cbrs,
    InfoGs,
    InfoRs,
    InfoGsRs,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 6] = [
        SelectorKind::Rs,
        SelectorKind::WrsHessian,
        SelectorKind::Cbrs,
        SelectorKind::InfoGs,
        SelectorKind::InfoRs,
        SelectorKind::InfoGsRs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SelectorKind::Rs => "rs",
            SelectorKind::WrsHessian => "wrs-hessian",
            SelectorKind::Cbrs => "cbrs",
            SelectorKind::InfoGs => "infogs",
            SelectorKind::InfoRs => "infors",
            SelectorKind::InfoGsRs => "infogs-rs",
        }
    }

    /// Whether the learnability threshold γ_l applies.
    pub fn uses_learnability_threshold(&self) -> bool {
        matches!(self, SelectorKind::InfoGs | SelectorKind::InfoGsRs)
    }

    pub fn build(&self, params: SelectorParams, n_classes: usize) -> Box<dyn Selector + Send> {
        match self {
            SelectorKind::Rs => Box::new(ReservoirSampler::new()),
            SelectorKind::WrsHessian => Box::new(HessianWeightedSampler::new()),
            SelectorKind::Cbrs => Box::new(ClassBalancedSampler::new(n_classes)),
            SelectorKind::InfoGs => Box::new(InfoGreedySelector::new(params)),
            SelectorKind::InfoRs => Box::new(InfoReservoirSampler::new(params)),
            SelectorKind::InfoGsRs => Box::new(InfoGreedySelector::with_reservoir_gate(params)),
        }
    }
}

impl FromStr for SelectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SelectorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown selector '{s}' (expected one of rs, wrs-hessian, cbrs, infogs, infors, infogs-rs)"))
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What happened to one offered point.
#[derive(Debug, Clone, PartialEq)]
pub enum Admission {
    Inserted,
    Replaced(MemoryItem),
    Rejected,
}

/// Per-batch tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchOutcome {
    /// Points handed to the sampling step (after any thresholding).
    pub considered: usize,
    /// Inserts plus replacements.
    pub updates: usize,
}

impl BatchOutcome {
    fn record(&mut self, admission: &Admission) {
        if !matches!(admission, Admission::Rejected) {
            self.updates += 1;
        }
    }
}

pub trait Selector {
    fn kind(&self) -> SelectorKind;

    fn observe_batch(
        &mut self,
        memory: &mut Memory,
        batch: Vec<MemoryItem>,
        rng: &mut dyn RngCore,
    ) -> Result<BatchOutcome, SelectorError>;

    /// Points admitted to reservoir consideration so far.
    fn reservoir_count(&self) -> u64;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_through_strings() {
        for kind in SelectorKind::ALL {
            assert_eq!(kind.as_str().parse::<SelectorKind>().unwrap(), kind);
        }
        assert!("gss".parse::<SelectorKind>().is_err());
        assert_eq!("ig".parse::<Criterion>().unwrap(), Criterion::Ig);
    }

    #[test]
    fn params_validation() {
        assert!(SelectorParams::default().validate().is_ok());
        assert!(SelectorParams { eta: -1.0, ..Default::default() }.validate().is_err());
        assert!(SelectorParams { gamma_i: f64::NEG_INFINITY, ..Default::default() }.validate().is_ok());
    }
}
