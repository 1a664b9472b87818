//! Bayesian linear model over normalised features and the closed-form
//! selection criteria computed from it.
//!
//! The model regresses one-hot targets with `y = wᵀh + ε`, `ε ~ N(0, σ²)` and
//! an isotropic prior `w ~ N(0, σ_w² I)` independently per output. Only the
//! ratio `c = σ²/σ_w²` (the jitter) ever enters the posterior:
//!
//! ```text
//! A = HᵀH + cI,   b = HᵀŶ,   w_k | M ~ N(A⁻¹ b_k, σ² A⁻¹)
//! ```
//!
//! `A⁻¹` is stored explicitly so every criterion costs one `A⁻¹h` product
//! (`O(d²)`) plus `O(dK)` work, and buffer edits are Sherman–Morrison updates.

use std::f64::consts::PI;

use thiserror::Error;

use crate::linalg::{self, Cholesky};

/// Guard on the downdate denominator `1 − hᵀA⁻¹h`.
pub const DOWNDATE_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BayesError {
    #[error("raw feature must have at least one entry")]
    EmptyFeature,
    #[error("non-finite feature entry {value} at index {index}")]
    NonFiniteFeature { index: usize, value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("downdate denominator {denominator:e} is at or below the guard; rebuild from the buffer")]
    DegradedConditioning { denominator: f64 },
}

/// A raw feature with a bias coordinate appended, scaled by `1/√d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// `[h0ᵀ, 1]ᵀ / √(d0 + 1)`.
    pub fn normalize(raw: &[f64]) -> Result<Self, BayesError> {
        if raw.is_empty() {
            return Err(BayesError::EmptyFeature);
        }
        if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(BayesError::NonFiniteFeature { index, value });
        }
        let d = raw.len() + 1;
        let scale = 1.0 / (d as f64).sqrt();
        let mut values = Vec::with_capacity(d);
        values.extend(raw.iter().map(|v| v * scale));
        values.push(scale);
        Ok(Self(values))
    }

    /// Wraps an already-normalised vector.
    pub fn from_normalized(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_squared(&self) -> f64 {
        linalg::dot(&self.0, &self.0)
    }
}

/// Free-function form of [`FeatureVector::normalize`].
pub fn normalize_feature(raw: &[f64]) -> Result<FeatureVector, BayesError> {
    FeatureVector::normalize(raw)
}

/// One-hot encoding of a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotTarget {
    label: usize,
    values: Vec<f64>,
}

impl OneHotTarget {
    pub fn new(label: usize, n_classes: usize) -> Result<Self, BayesError> {
        if label >= n_classes {
            return Err(BayesError::LabelOutOfRange { label, n_classes });
        }
        let mut values = vec![0.0; n_classes];
        values[label] = 1.0;
        Ok(Self { label, values })
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn n_classes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Predictive distribution of the K outputs at one feature vector. The
/// variance is shared because every output has the same posterior precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPredictive {
    pub means: Vec<f64>,
    pub variance: f64,
}

/// Surprise, learnability and friends for one point, all derived from a
/// single `A⁻¹h` product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScores {
    pub surprise: f64,
    pub learnability: f64,
    /// `E_{w ~ posterior⁺}[log p(y | w, h)]`, the first term of the
    /// information gain.
    pub expected_log_likelihood: f64,
    pub entropy_reduction: f64,
}

impl PointScores {
    /// `η·learnability + surprise`.
    pub fn mic(&self, eta: f64) -> f64 {
        self.surprise + eta * self.learnability
    }

    /// `η·E[log p(y|w)] + surprise`; the KL information gain at `η = 1`.
    pub fn info_gain(&self, eta: f64) -> f64 {
        self.surprise + eta * self.expected_log_likelihood
    }

    fn from_prior_quantities<I>(q: f64, means: I, target: &OneHotTarget, sigma2: f64) -> Self
    where
        I: IntoIterator<Item = f64>,
    {
        let v = sigma2 * (1.0 + q);
        let q_plus = q / (1.0 + q);
        let v_plus = sigma2 * (1.0 + q_plus);
        // Every output shares the variance, so the log-normalisers factor out.
        let mut sq = 0.0;
        let mut sq_plus = 0.0;
        for (mu, &y) in means.into_iter().zip(target.values()) {
            let mu_plus = (mu + q * y) / (1.0 + q);
            sq += (y - mu) * (y - mu);
            sq_plus += (y - mu_plus) * (y - mu_plus);
        }
        let k = target.n_classes() as f64;
        let log_prior = (2.0 * PI * sigma2).ln();
        let log_growth = q.ln_1p();
        let log_growth_plus = q_plus.ln_1p();
        Self {
            surprise: 0.5 * k * (log_prior + log_growth) + sq / (2.0 * v),
            learnability: -0.5 * k * (log_prior + log_growth_plus) - sq_plus / (2.0 * v_plus),
            expected_log_likelihood: -0.5 * k * log_prior - sq_plus / (2.0 * sigma2) - 0.5 * k * q_plus,
            entropy_reduction: 0.5 * log_growth,
        }
    }
}

/// `ln N(x | mean, variance)`.
pub fn gaussian_log_density(x: f64, mean: f64, variance: f64) -> f64 {
    let r = x - mean;
    -0.5 * (2.0 * PI * variance).ln() - r * r / (2.0 * variance)
}

/// Posterior of the Bayesian linear model: `A⁻¹`, `b` and the hyperparameters.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    dim: usize,
    n_outputs: usize,
    inv_a: Vec<f64>,
    b: Vec<f64>,
    /// `(A⁻¹b)ᵀ`, row-major `K × d`, kept current by the rank-one updates.
    mean_t: Vec<f64>,
    sigma2: f64,
    jitter: f64,
    count: usize,
    ops_since_rebuild: usize,
}

impl PosteriorState {
    /// Empty-buffer posterior from the noise and prior scales.
    pub fn new(d0: usize, n_outputs: usize, sigma: f64, sigma_w: f64) -> Result<Self, BayesError> {
        if !(sigma_w > 0.0) || !sigma_w.is_finite() {
            return Err(BayesError::InvalidConfig(format!("sigma_w must be positive, got {sigma_w}")));
        }
        Self::with_jitter(d0, n_outputs, sigma, sigma * sigma / (sigma_w * sigma_w))
    }

    /// Empty-buffer posterior parameterised directly by `c = σ²/σ_w²`.
    pub fn with_jitter(d0: usize, n_outputs: usize, sigma: f64, jitter: f64) -> Result<Self, BayesError> {
        validate_config(d0, n_outputs, sigma, jitter)?;
        let dim = d0 + 1;
        let mut inv_a = vec![0.0; dim * dim];
        for i in 0..dim {
            inv_a[i * dim + i] = 1.0 / jitter;
        }
        Ok(Self {
            dim,
            n_outputs,
            inv_a,
            b: vec![0.0; dim * n_outputs],
            mean_t: vec![0.0; dim * n_outputs],
            sigma2: sigma * sigma,
            jitter,
            count: 0,
            ops_since_rebuild: 0,
        })
    }

    /// Recomputes the posterior from scratch with a Cholesky factorisation of
    /// `HᵀH + cI`.
    pub fn rebuild<'a, I>(
        d0: usize,
        n_outputs: usize,
        points: I,
        sigma: f64,
        jitter: f64,
    ) -> Result<Self, BayesError>
    where
        I: IntoIterator<Item = (&'a FeatureVector, &'a OneHotTarget)>,
    {
        validate_config(d0, n_outputs, sigma, jitter)?;
        let dim = d0 + 1;
        let mut a = vec![0.0; dim * dim];
        let mut b = vec![0.0; dim * n_outputs];
        let mut count = 0;
        for (h, y) in points {
            check_dim(dim, h.dim())?;
            check_dim(n_outputs, y.n_classes())?;
            linalg::sym_rank_one(&mut a, h.as_slice(), 1.0);
            for (i, &hi) in h.as_slice().iter().enumerate() {
                b[i * n_outputs + y.label()] += hi;
            }
            count += 1;
        }
        for i in 0..dim {
            a[i * dim + i] += jitter;
        }
        let chol = Cholesky::factor(&a, dim)
            .ok_or_else(|| BayesError::InvalidConfig("HᵀH + cI is not positive definite".into()))?;
        let mut state = Self {
            dim,
            n_outputs,
            inv_a: chol.inverse(),
            b,
            mean_t: Vec::new(),
            sigma2: sigma * sigma,
            jitter,
            count,
            ops_since_rebuild: 0,
        };
        let w = state.posterior_mean();
        state.mean_t = vec![0.0; dim * n_outputs];
        for i in 0..dim {
            for k in 0..n_outputs {
                state.mean_t[k * dim + i] = w[i * n_outputs + k];
            }
        }
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn ops_since_rebuild(&self) -> usize {
        self.ops_since_rebuild
    }

    /// Row-major `A⁻¹`.
    pub fn inv_a(&self) -> &[f64] {
        &self.inv_a
    }

    /// Row-major `d × K` cross moment `HᵀŶ`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Posterior mean weights `A⁻¹b` (row-major `d × K`).
    pub fn posterior_mean(&self) -> Vec<f64> {
        let (d, k) = (self.dim, self.n_outputs);
        let mut w = vec![0.0; d * k];
        for i in 0..d {
            let row = &self.inv_a[i * d..(i + 1) * d];
            for j in 0..k {
                w[i * k + j] = (0..d).map(|l| row[l] * self.b[l * k + j]).sum();
            }
        }
        w
    }

    /// Largest `|A⁻¹_ij − A⁻¹_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i + 1..d {
                worst = worst.max((self.inv_a[i * d + j] - self.inv_a[j * d + i]).abs());
            }
        }
        worst
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::factor(&self.inv_a, self.dim).is_some()
    }

    /// `hᵀA⁻¹h` from the upper triangle of `A⁻¹`.
    fn quad_form(&self, h: &FeatureVector) -> f64 {
        assert_eq!(h.dim(), self.dim, "feature dimension does not match posterior");
        linalg::sym_quad_form(&self.inv_a, h.as_slice())
    }

    /// Predictive means `(A⁻¹b)ᵀh`.
    fn means_at(&self, h: &FeatureVector) -> Vec<f64> {
        self.mean_t.chunks_exact(self.dim).map(|w| linalg::dot(w, h.as_slice())).collect()
    }

    /// Rank-one update of the cached mean after absorbing (`sign = 1`) or
    /// removing (`sign = −1`) `(h, ŷ)`: `W ± u (ŷ − Wᵀh)ᵀ / (1 ± q)`.
    fn shift_mean(&mut self, h: &FeatureVector, label: usize, u: &[f64], scale: f64) {
        let means = self.means_at(h);
        for (k, row) in self.mean_t.chunks_exact_mut(self.dim).enumerate() {
            let r = (if k == label { 1.0 } else { 0.0 }) - means[k];
            let s = scale * r;
            for (w, &ui) in row.iter_mut().zip(u) {
                *w += s * ui;
            }
        }
    }

    fn inv_a_times(&self, h: &FeatureVector) -> (Vec<f64>, f64) {
        assert_eq!(h.dim(), self.dim, "feature dimension does not match posterior");
        let mut u = vec![0.0; self.dim];
        linalg::sym_matvec(&self.inv_a, h.as_slice(), &mut u);
        let q = linalg::dot(h.as_slice(), &u);
        (u, q)
    }

    /// Sherman–Morrison update absorbing `(h, ŷ)`.
    pub fn add(&mut self, h: &FeatureVector, y: &OneHotTarget) {
        assert_eq!(y.n_classes(), self.n_outputs, "target width does not match posterior");
        let (u, q) = self.inv_a_times(h);
        self.shift_mean(h, y.label(), &u, 1.0 / (1.0 + q));
        linalg::sym_rank_one(&mut self.inv_a, &u, -1.0 / (1.0 + q));
        self.shift_b(h, y.label(), 1.0);
        self.count += 1;
        self.ops_since_rebuild += 1;
    }

    /// Sherman–Morrison downdate removing a previously absorbed `(h, ŷ)`.
    /// Leaves the state untouched and reports degraded conditioning when
    /// `1 − hᵀA⁻¹h` is at or below [`DOWNDATE_GUARD`].
    pub fn remove(&mut self, h: &FeatureVector, y: &OneHotTarget) -> Result<(), BayesError> {
        assert_eq!(y.n_classes(), self.n_outputs, "target width does not match posterior");
        let (u, q) = self.inv_a_times(h);
        let denominator = 1.0 - q;
        if !(denominator > DOWNDATE_GUARD) {
            return Err(BayesError::DegradedConditioning { denominator });
        }
        self.shift_mean(h, y.label(), &u, -1.0 / denominator);
        linalg::sym_rank_one(&mut self.inv_a, &u, 1.0 / denominator);
        self.shift_b(h, y.label(), -1.0);
        self.count = self.count.saturating_sub(1);
        self.ops_since_rebuild += 1;
        Ok(())
    }

    fn shift_b(&mut self, h: &FeatureVector, label: usize, sign: f64) {
        let k = self.n_outputs;
        for (i, &hi) in h.as_slice().iter().enumerate() {
            self.b[i * k + label] += sign * hi;
        }
    }

    /// Copy of the state with `(h, ŷ)` absorbed.
    pub fn with_added(&self, h: &FeatureVector, y: &OneHotTarget) -> Self {
        let mut next = self.clone();
        next.add(h, y);
        next
    }

    pub fn predictive(&self, h: &FeatureVector) -> GaussianPredictive {
        let q = self.quad_form(h);
        GaussianPredictive { means: self.means_at(h), variance: self.sigma2 * (1.0 + q) }
    }

    /// All criteria for a candidate `(h, ŷ)` against this posterior. The
    /// augmented posterior is never materialised: every criterion follows
    /// from `q = hᵀA⁻¹h` and the current predictive means.
    pub fn score(&self, h: &FeatureVector, y: &OneHotTarget) -> PointScores {
        assert_eq!(y.n_classes(), self.n_outputs, "target width does not match posterior");
        let q = self.quad_form(h);
        let means = self.mean_t.chunks_exact(self.dim).map(|w| linalg::dot(w, h.as_slice()));
        PointScores::from_prior_quantities(q, means, y, self.sigma2)
    }

    /// [`score`](Self::score) for several candidates at once; the values
    /// are identical, but `A⁻¹` is swept once for the whole set.
    pub fn score_many(&self, points: &[(&FeatureVector, &OneHotTarget)]) -> Vec<PointScores> {
        let xs: Vec<&[f64]> = points
            .iter()
            .map(|(h, y)| {
                assert_eq!(h.dim(), self.dim, "feature dimension does not match posterior");
                assert_eq!(y.n_classes(), self.n_outputs, "target width does not match posterior");
                h.as_slice()
            })
            .collect();
        let mut qs = vec![0.0; xs.len()];
        linalg::sym_quad_forms(&self.inv_a, &xs, &mut qs);
        points
            .iter()
            .zip(qs)
            .map(|((h, y), q)| {
                let means = self.mean_t.chunks_exact(self.dim).map(|w| linalg::dot(w, h.as_slice()));
                PointScores::from_prior_quantities(q, means, y, self.sigma2)
            })
            .collect()
    }

    pub fn surprise(&self, h: &FeatureVector, y: &OneHotTarget) -> f64 {
        self.score(h, y).surprise
    }

    pub fn learnability(&self, h: &FeatureVector, y: &OneHotTarget) -> f64 {
        self.score(h, y).learnability
    }

    pub fn mic(&self, h: &FeatureVector, y: &OneHotTarget, eta: f64) -> f64 {
        self.score(h, y).mic(eta)
    }

    pub fn info_gain(&self, h: &FeatureVector, y: &OneHotTarget, eta: f64) -> f64 {
        self.score(h, y).info_gain(eta)
    }

    /// `½ ln(1 + hᵀA⁻¹h)`; does not depend on the target.
    pub fn entropy_reduction(&self, h: &FeatureVector) -> f64 {
        0.5 * self.quad_form(h).ln_1p()
    }

    /// Scores of a member `(h_m, ŷ_m)` of this posterior's point set against
    /// the same set with that member removed. Uses the downdated products
    /// `(A − h hᵀ)⁻¹h = u / (1 − q)` and `b − h ŷᵀ` without forming the
    /// downdated inverse.
    pub fn leave_one_out_scores(&self, h: &FeatureVector, y: &OneHotTarget) -> Result<PointScores, BayesError> {
        assert_eq!(y.n_classes(), self.n_outputs, "target width does not match posterior");
        let q = self.quad_form(h);
        let denominator = 1.0 - q;
        if !(denominator > DOWNDATE_GUARD) {
            return Err(BayesError::DegradedConditioning { denominator });
        }
        let q_minus = q / denominator;
        let means_minus = self
            .mean_t
            .chunks_exact(self.dim)
            .zip(y.values())
            .map(|(w, &yk)| (linalg::dot(w, h.as_slice()) - q * yk) / denominator);
        Ok(PointScores::from_prior_quantities(q_minus, means_minus, y, self.sigma2))
    }

    pub fn mic_leave_one_out(&self, h: &FeatureVector, y: &OneHotTarget, eta: f64) -> Result<f64, BayesError> {
        Ok(self.leave_one_out_scores(h, y)?.mic(eta))
    }

    pub(crate) fn mark_rebuilt(&mut self) {
        self.ops_since_rebuild = 0;
    }
}

fn validate_config(d0: usize, n_outputs: usize, sigma: f64, jitter: f64) -> Result<(), BayesError> {
    if d0 == 0 {
        return Err(BayesError::InvalidConfig("raw feature dimension must be at least 1".into()));
    }
    if n_outputs == 0 {
        return Err(BayesError::InvalidConfig("need at least one output".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(BayesError::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    if !(jitter > 0.0) || !jitter.is_finite() {
        return Err(BayesError::InvalidConfig(format!("jitter must be positive, got {jitter}")));
    }
    Ok(())
}

fn check_dim(expected: usize, actual: usize) -> Result<(), BayesError> {
    if expected == actual {
        Ok(())
    } else {
        Err(BayesError::DimensionMismatch { expected, actual })
    }
}
