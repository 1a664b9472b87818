//! One-dimensional Gaussian-process toy: surprise and learnability of two
//! probe observations against a small memory of noisy prior draws.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use super::EvalError;
use crate::bayes::gaussian_log_density;
use crate::linalg::{dot, Cholesky};
use crate::seeded_rng;

/// Diagonal jitter added once when a kernel matrix fails to factor.
const ESCALATION_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GpToyConfig {
    /// Coefficient `s` in `k(x, x') = exp(−s (x − x')²)`.
    pub kernel_scale: f64,
    pub noise_var: f64,
    /// Memory inputs.
    pub grid: Vec<f64>,
    /// `(x, y)` observations scored against the memory.
    pub probes: Vec<(f64, f64)>,
    pub n_draws: usize,
    pub seed: u64,
}

impl Default for GpToyConfig {
    fn default() -> Self {
        Self {
            kernel_scale: 2.0,
            noise_var: 0.04,
            grid: (0..10).map(|i| -1.0 + 2.0 * i as f64 / 9.0).collect(),
            probes: vec![(0.0, 1.0), (1.5, 1.0)],
            n_draws: 100,
            seed: 0,
        }
    }
}

impl GpToyConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidConfig(m.into()));
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return bad("noise variance must be positive");
        }
        if !(self.kernel_scale > 0.0 && self.kernel_scale.is_finite()) {
            return bad("kernel scale must be positive");
        }
        if self.grid.is_empty() || self.grid.iter().any(|x| !x.is_finite()) {
            return bad("grid must be non-empty and finite");
        }
        if self.probes.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return bad("probes must be finite");
        }
        if self.n_draws == 0 {
            return bad("need at least one draw");
        }
        Ok(())
    }

    fn kernel(&self, a: f64, b: f64) -> f64 {
        (-self.kernel_scale * (a - b) * (a - b)).exp()
    }

    fn gram(&self, xs: &[f64], diag: f64) -> Vec<f64> {
        let n = xs.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = self.kernel(xs[i], xs[j]);
            }
            k[i * n + i] += diag;
        }
        k
    }
}

fn factor_with_escalation(mut k: Vec<f64>, n: usize) -> Result<Cholesky, EvalError> {
    if let Some(c) = Cholesky::factor(&k, n) {
        return Ok(c);
    }
    for i in 0..n {
        k[i * n + i] += ESCALATION_JITTER;
    }
    Cholesky::factor(&k, n).ok_or(EvalError::Conditioning { jitter: ESCALATION_JITTER })
}

/// Exact GP regression posterior given noisy observations.
struct GpPosterior<'a> {
    config: &'a GpToyConfig,
    xs: Vec<f64>,
    chol: Cholesky,
    alpha: Vec<f64>,
}

impl<'a> GpPosterior<'a> {
    fn condition(config: &'a GpToyConfig, xs: Vec<f64>, ys: &[f64]) -> Result<Self, EvalError> {
        let n = xs.len();
        let chol = factor_with_escalation(config.gram(&xs, config.noise_var), n)?;
        let mut alpha = ys.to_vec();
        chol.solve_in_place(&mut alpha);
        Ok(Self { config, xs, chol, alpha })
    }

    /// Mean and variance of the latent function at `x`.
    fn latent(&self, x: f64) -> (f64, f64) {
        let k_star: Vec<f64> = self.xs.iter().map(|&xi| self.config.kernel(x, xi)).collect();
        let mean = dot(&k_star, &self.alpha);
        let mut v = k_star.clone();
        self.chol.solve_in_place(&mut v);
        let var = (self.config.kernel(x, x) - dot(&k_star, &v)).max(0.0);
        (mean, var)
    }

    fn log_predictive(&self, x: f64, y: f64) -> f64 {
        let (mean, var) = self.latent(x);
        gaussian_log_density(y, mean, var + self.config.noise_var)
    }
}

fn sample_memory(config: &GpToyConfig, rng: &mut impl Rng) -> Result<Vec<f64>, EvalError> {
    let n = config.grid.len();
    let prior = factor_with_escalation(config.gram(&config.grid, 0.0), n)?;
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let l = prior.lower();
    let noise_sd = config.noise_var.sqrt();
    Ok((0..n)
        .map(|i| dot(&l[i * n..i * n + i + 1], &z[..i + 1]) + noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeStats {
    pub point: (f64, f64),
    /// One entry per draw.
    pub surprise: Vec<f64>,
    pub learnability: Vec<f64>,
    /// Draws in which this probe's surprise exceeded the median held-in
    /// grid surprise.
    pub exceeds_median: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpToyReport {
    pub n_draws: usize,
    pub probes: Vec<ProbeStats>,
    /// Per draw: median surprise of the grid observations under the memory
    /// that contains them.
    pub held_in_median_surprise: Vec<f64>,
    /// Draws where every probe exceeded the held-in median.
    pub all_probes_exceed: usize,
    /// Draws where the last probe's learnability beat the first's.
    pub learnability_wins: usize,
}

impl GpToyReport {
    pub fn learnability_win_rate(&self) -> f64 {
        self.learnability_wins as f64 / self.n_draws as f64
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn gp_toy(config: &GpToyConfig) -> Result<GpToyReport, EvalError> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed, 0);
    let mut probes: Vec<ProbeStats> = config
        .probes
        .iter()
        .map(|&point| ProbeStats { point, surprise: Vec::new(), learnability: Vec::new(), exceeds_median: 0 })
        .collect();
    let mut held_in_median_surprise = Vec::with_capacity(config.n_draws);
    let mut all_probes_exceed = 0;
    let mut learnability_wins = 0;

    for _ in 0..config.n_draws {
        let ys = sample_memory(config, &mut rng)?;
        let memory = GpPosterior::condition(config, config.grid.clone(), &ys)?;
        let mut held_in: Vec<f64> =
            config.grid.iter().zip(&ys).map(|(&x, &y)| -memory.log_predictive(x, y)).collect();
        let med = median(&mut held_in);
        held_in_median_surprise.push(med);

        let mut all_exceed = true;
        for stats in &mut probes {
            let (px, py) = stats.point;
            let surprise = -memory.log_predictive(px, py);
            let mut xs = config.grid.clone();
            xs.push(px);
            let mut ys_plus = ys.clone();
            ys_plus.push(py);
            let learnability = GpPosterior::condition(config, xs, &ys_plus)?.log_predictive(px, py);
            if surprise > med {
                stats.exceeds_median += 1;
            } else {
                all_exceed = false;
            }
            stats.surprise.push(surprise);
            stats.learnability.push(learnability);
        }
        all_probes_exceed += usize::from(all_exceed);
        if let (Some(first), Some(last)) = (probes.first(), probes.last()) {
            if last.learnability.last() > first.learnability.last() {
                learnability_wins += 1;
            }
        }
    }
    Ok(GpToyReport { n_draws: config.n_draws, probes, held_in_median_surprise, all_probes_exceed, learnability_wins })
}

/// One point of a predictive curve.
#[derive(Debug, Clone, PartialEq)]
pub struct GpCurvePoint {
    pub probe: usize,
    /// `"memory"` or `"memory+probe"`.
    pub condition: &'static str,
    pub x: f64,
    pub mean: f64,
    /// Standard deviation of the latent function.
    pub std: f64,
}

/// Predictive curves for the first draw of `config`, on `n_points` inputs
/// spanning the grid and the probes with a 0.5 margin.
pub fn gp_curves(config: &GpToyConfig, n_points: usize) -> Result<Vec<GpCurvePoint>, EvalError> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed, 0);
    let ys = sample_memory(config, &mut rng)?;
    let xs_all = config.grid.iter().copied().chain(config.probes.iter().map(|p| p.0));
    let lo = xs_all.clone().fold(f64::INFINITY, f64::min) - 0.5;
    let hi = xs_all.fold(f64::NEG_INFINITY, f64::max) + 0.5;
    let inputs: Vec<f64> =
        (0..n_points.max(2)).map(|i| lo + (hi - lo) * i as f64 / (n_points.max(2) - 1) as f64).collect();

    let memory = GpPosterior::condition(config, config.grid.clone(), &ys)?;
    let mut out = Vec::new();
    for (probe, &(px, py)) in config.probes.iter().enumerate() {
        let mut xs = config.grid.clone();
        xs.push(px);
        let mut ys_plus = ys.clone();
        ys_plus.push(py);
        let with_probe = GpPosterior::condition(config, xs, &ys_plus)?;
        for (condition, post) in [("memory", &memory), ("memory+probe", &with_probe)] {
            for &x in &inputs {
                let (mean, var) = post.latent(x);
                out.push(GpCurvePoint { probe, condition, x, mean, std: var.sqrt() });
            }
        }
    }
    Ok(out)
}

/// Writes curves as CSV with header `probe,condition,x,mean,std`.
pub fn write_gp_curves<W: Write>(points: &[GpCurvePoint], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| EvalError::Output(e.to_string());
    w.write_record(["probe", "condition", "x", "mean", "std"]).map_err(err)?;
    for p in points {
        w.write_record([p.probe.to_string(), p.condition.to_string(), p.x.to_string(), p.mean.to_string(), p.std.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| EvalError::Output(e.to_string()))
}
