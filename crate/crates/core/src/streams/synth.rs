//! Synthetic Gaussian-mixture feature datasets with optional label noise.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DataError, Dataset};

const MAX_CENTER_TRIES: usize = 1000;

/// Class-conditional isotropic Gaussians with unit noise.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    centers: Vec<Vec<f64>>,
}

/// A sampled dataset together with the rows whose labels were corrupted.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// Sorted row indices of injected outliers.
    pub outliers: Vec<usize>,
}

impl GaussianMixture {
    /// Draws `n_classes` centers whose pairwise distances are all at least
    /// `separation`.
    pub fn new(n_classes: usize, d0: usize, separation: f64, rng: &mut impl Rng) -> Self {
        assert!(n_classes > 0 && d0 > 0, "need at least one class and one dimension");
        // Center spread chosen so the typical pairwise distance is 1.5·separation.
        let mut spread = 1.5 * separation.max(0.0) / (2.0 * d0 as f64).sqrt();
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(n_classes);
        while centers.len() < n_classes {
            let mut placed = false;
            for _ in 0..MAX_CENTER_TRIES {
                let c: Vec<f64> = (0..d0).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect();
                let far_enough = centers.iter().all(|o| {
                    let d2: f64 = o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2.sqrt() >= separation
                });
                if far_enough {
                    centers.push(c);
                    placed = true;
                    break;
                }
            }
            if !placed {
                spread *= 1.1;
            }
        }
        Self { centers }
    }

    pub fn n_classes(&self) -> usize {
        self.centers.len()
    }

    pub fn d0(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Samples `n_per_class` points per class (class-major order). Exactly
    /// `⌊outlier_fraction·n⌋` rows get a different label drawn uniformly from
    /// the other classes and an extra `outlier_scale`·N(0, I) feature shift.
    pub fn sample(
        &self,
        n_per_class: usize,
        outlier_fraction: f64,
        outlier_scale: f64,
        rng: &mut impl Rng,
    ) -> Result<SyntheticData, DataError> {
        if !(0.0..1.0).contains(&outlier_fraction) {
            return Err(DataError::InvalidConfig(format!("outlier fraction must be in [0, 1), got {outlier_fraction}")));
        }
        if !(outlier_scale >= 0.0 && outlier_scale.is_finite()) {
            return Err(DataError::InvalidConfig(format!("outlier scale must be finite and ≥ 0, got {outlier_scale}")));
        }
        if n_per_class == 0 {
            return Err(DataError::Empty);
        }
        let k = self.n_classes();
        let d0 = self.d0();
        let n = k * n_per_class;
        let mut features = vec![0.0f64; n * d0];
        let mut labels = Vec::with_capacity(n);
        for (class, center) in self.centers.iter().enumerate() {
            for i in 0..n_per_class {
                let row = class * n_per_class + i;
                for (j, c) in center.iter().enumerate() {
                    features[row * d0 + j] = c + rng.sample::<f64, _>(StandardNormal);
                }
                labels.push(class as u32);
            }
        }

        let n_outliers = (outlier_fraction * n as f64).floor() as usize;
        let mut outliers = index::sample(rng, n, n_outliers).into_vec();
        outliers.sort_unstable();
        for &row in &outliers {
            if k > 1 {
                let shift = rng.random_range(1..k as u32);
                labels[row] = (labels[row] + shift) % k as u32;
            }
            for v in &mut features[row * d0..(row + 1) * d0] {
                *v += outlier_scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let features = features.into_iter().map(|v| v as f32).collect();
        Ok(SyntheticData { dataset: Dataset::new(features, labels, d0, k)?, outliers })
    }
}

/// Seeded convenience wrapper: draws the centers and the sample from one
/// generator.
pub fn synth_gaussian_mixture(
    n_classes: usize,
    d0: usize,
    n_per_class: usize,
    class_separation: f64,
    outlier_fraction: f64,
    outlier_scale: f64,
    seed: u64,
) -> Result<SyntheticData, DataError> {
    if n_classes == 0 || d0 == 0 {
        return Err(DataError::InvalidConfig("need at least one class and one dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mixture = GaussianMixture::new(n_classes, d0, class_separation, &mut rng);
    mixture.sample(n_per_class, outlier_fraction, outlier_scale, &mut rng)
}
