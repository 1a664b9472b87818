/// Single-pass count, mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Population variance; zero until two values have been seen.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `mean + gamma·std`, or `−∞` while fewer than two values have been seen
    /// so cold-start observations always pass. An infinite `gamma` is returned
    /// as is.
    pub fn threshold(&self, gamma: f64) -> f64 {
        if self.count < 2 {
            f64::NEG_INFINITY
        } else if gamma.is_infinite() {
            gamma
        } else {
            self.mean + gamma * self.std()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn one_two_three() {
        let mut m = RunningMoments::new();
        for x in [1.0, 2.0, 3.0] {
            m.update(x);
        }
        let (mean, var) = two_pass(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean(), mean);
        assert!((m.variance() - var).abs() < 1e-15);
        assert!((m.variance() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_value_has_zero_std() {
        let mut m = RunningMoments::new();
        m.update(4.2);
        assert_eq!(m.std(), 0.0);
    }

    #[test]
    fn constant_sequence_has_zero_m2() {
        let mut m = RunningMoments::new();
        for _ in 0..1000 {
            m.update(0.7);
        }
        assert_eq!(m.m2(), 0.0);
    }

    #[test]
    fn threshold_rules() {
        let m = RunningMoments::new();
        assert_eq!(m.threshold(0.5), f64::NEG_INFINITY);
        // mean 1, population std 2.
        let mut m = RunningMoments::new();
        m.update(-1.0);
        m.update(3.0);
        assert_eq!(m.threshold(0.5), 2.0);
        assert_eq!(m.threshold(0.0), 1.0);
        assert_eq!(m.threshold(f64::NEG_INFINITY), f64::NEG_INFINITY);
    }

    #[test]
    fn threshold_with_infinite_gamma_and_zero_std() {
        let mut m = RunningMoments::new();
        m.update(1.0);
        m.update(1.0);
        assert_eq!(m.threshold(f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert_eq!(m.threshold(f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn million_values_match_two_pass() {
        let xs: Vec<f64> = (0..1_000_000u64).map(|i| ((i * 2654435761) % 1000) as f64 * 1e-3 + 1e3).collect();
        let mut m = RunningMoments::new();
        xs.iter().for_each(|&x| m.update(x));
        let (mean, var) = two_pass(&xs);
        assert!((m.mean() - mean).abs() < 1e-10);
        assert!((m.variance() - var).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn matches_two_pass(xs in proptest::collection::vec(-1e3f64..1e3, 2..500)) {
            let mut m = RunningMoments::new();
            xs.iter().for_each(|&x| m.update(x));
            let (mean, var) = two_pass(&xs);
            prop_assert!((m.mean() - mean).abs() < 1e-10);
            prop_assert!((m.variance() - var).abs() < 1e-10 * var.max(1.0));
            prop_assert!(m.m2() >= 0.0);
        }
    }
}
