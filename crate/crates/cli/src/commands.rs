use std::fs::File;
use std::path::Path;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use rayon::prelude::*;

use infosel::eval::{gp_curves, gp_toy, write_gp_curves, GpToyConfig};
use infosel::harness::{evaluate, run_selection, RunConfig};
use infosel::selectors::{SelectorKind, SelectorParams};
use infosel::streams::{load_binary, load_csv, save_binary, save_csv, synth_gaussian_mixture, DataError, Dataset, StreamConfig};

use crate::args::{BenchArgs, DataArgs, DemoGpArgs, GenArgs, MixtureArgs, ModelArgs, RunArgs, StreamArgs, SweepArgs};
use crate::results::{self, ResultRow, RowKey};
use crate::{CmdResult, Failure};

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn check_mixture(m: &MixtureArgs) -> Result<(), Failure> {
    if m.classes == 0 || m.d0 == 0 || m.per_class == 0 {
        return Err(usage("classes, d0 and per-class must be positive"));
    }
    if !(0.0..1.0).contains(&m.outlier_fraction) {
        return Err(usage(format!("outlier fraction must be in [0, 1), got {}", m.outlier_fraction)));
    }
    if !(m.separation.is_finite() && m.separation >= 0.0 && m.outlier_scale.is_finite() && m.outlier_scale >= 0.0) {
        return Err(usage("separation and outlier scale must be finite and non-negative"));
    }
    Ok(())
}

fn sample_mixture(m: &MixtureArgs, seed: u64) -> anyhow::Result<Dataset> {
    let data = synth_gaussian_mixture(m.classes, m.d0, m.per_class, m.separation, m.outlier_fraction, m.outlier_scale, seed)?;
    Ok(data.dataset)
}

pub fn gen(args: &GenArgs) -> CmdResult {
    check_mixture(&args.mixture)?;
    let data = sample_mixture(&args.mixture, args.seed)?;
    let saved = if is_csv(&args.out) { save_csv(&data, &args.out) } else { save_binary(&data, &args.out) };
    saved.with_context(|| format!("cannot write {}", args.out.display()))?;
    eprintln!("wrote {} rows ({} classes, d0 = {}) to {}", data.len(), data.n_classes(), data.d0(), args.out.display());
    Ok(())
}

/// Parses `synth[:key=value,...]` into mixture parameters and a data seed.
fn parse_synth(spec: &str) -> Result<Option<(MixtureArgs, u64)>, Failure> {
    let rest = match spec.strip_prefix("synth") {
        Some("") => "",
        Some(r) if r.starts_with(':') => &r[1..],
        _ => return Ok(None),
    };
    let mut m = MixtureArgs { classes: 10, per_class: 500, d0: 16, separation: 3.0, outlier_fraction: 0.0, outlier_scale: 0.5 };
    let mut seed = 0;
    for pair in rest.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = pair.split_once('=').ok_or_else(|| usage(format!("expected key=value in dataset spec, got '{pair}'")))?;
        let bad = |e: &dyn std::fmt::Display| usage(format!("bad value for {key}: {e}"));
        match key.trim() {
            "classes" => m.classes = value.parse().map_err(|e| bad(&e))?,
            "per-class" => m.per_class = value.parse().map_err(|e| bad(&e))?,
            "d0" => m.d0 = value.parse().map_err(|e| bad(&e))?,
            "separation" => m.separation = value.parse().map_err(|e| bad(&e))?,
            "outliers" => m.outlier_fraction = value.parse().map_err(|e| bad(&e))?,
            "outlier-scale" => m.outlier_scale = value.parse().map_err(|e| bad(&e))?,
            "seed" => seed = value.parse().map_err(|e| bad(&e))?,
            other => return Err(usage(format!("unknown dataset key '{other}'"))),
        }
    }
    check_mixture(&m)?;
    Ok(Some((m, seed)))
}

/// Loads or samples the dataset and splits off the relearn test set.
fn load_data(args: &DataArgs) -> Result<(Dataset, Dataset), Failure> {
    if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
        return Err(usage(format!("test fraction must be in (0, 1), got {}", args.test_fraction)));
    }
    let data = match parse_synth(&args.dataset)? {
        Some((m, seed)) => sample_mixture(&m, seed)?,
        None => {
            let path = Path::new(&args.dataset);
            match if is_csv(path) { load_csv(path) } else { load_binary(path) } {
                Ok(d) => d,
                Err(e @ DataError::Io { .. }) => return Err(anyhow::Error::new(e).into()),
                Err(e) => return Err(anyhow::Error::new(e).context(format!("cannot load dataset {}", path.display())).into()),
            }
        }
    };
    let split = data.split_holdout(args.test_fraction, args.split_seed);
    Ok(split.with_context(|| format!("cannot split {}", args.dataset))?)
}

/// One (selector, thresholds, imbalance, seed) cell.
#[derive(Debug, Clone)]
struct Job {
    selector: SelectorKind,
    eta: f64,
    gamma_i: f64,
    imbalance: usize,
    seed: u64,
}

fn uses_info_params(kind: SelectorKind) -> bool {
    matches!(kind, SelectorKind::InfoRs | SelectorKind::InfoGs | SelectorKind::InfoGsRs)
}

/// Everything shared by the jobs of one command.
struct Plan<'a> {
    model: &'a ModelArgs,
    stream: &'a StreamArgs,
    n_classes: usize,
}

impl Plan<'_> {
    fn stream_config(&self, job: &Job) -> Result<StreamConfig, DataError> {
        let s = self.stream;
        let mut config = StreamConfig::contiguous(self.n_classes, s.tasks)?;
        config.base_epochs = s.epochs;
        config.imbalance = job.imbalance;
        config.starred_task = Some(s.starred_task.unwrap_or((job.seed % s.tasks as u64) as usize));
        config.batch_size = s.batch_size;
        config.seed = job.seed;
        config.drift_rate = s.drift_rate;
        config.validate(self.n_classes)?;
        Ok(config)
    }

    fn run_config(&self, job: &Job) -> RunConfig {
        let m = self.model;
        let mut run = RunConfig::new(job.selector, m.budget);
        run.params = SelectorParams {
            eta: job.eta,
            gamma_i: job.gamma_i,
            gamma_l: m.gamma_l.unwrap_or(SelectorParams::default().gamma_l),
            criterion: m.criterion,
        };
        run.sigma = m.sigma;
        run.jitter = m.jitter;
        run.rebuild_period = m.rebuild_period;
        run
    }

    fn key(&self, job: &Job) -> RowKey {
        let row = self.blank_row(job);
        row.key()
    }

    fn blank_row(&self, job: &Job) -> ResultRow {
        let info = uses_info_params(job.selector);
        let run = self.run_config(job);
        ResultRow {
            selector: job.selector.to_string(),
            seed: job.seed,
            imbalance: job.imbalance,
            budget: run.budget,
            eta: info.then_some(run.params.eta),
            gamma_i: info.then_some(run.params.gamma_i),
            gamma_l: job.selector.uses_learnability_threshold().then_some(run.params.gamma_l),
            relearn_accuracy: f64::NAN,
            class_variance: f64::NAN,
            final_reservoir_n: 0,
            wall_ms: 0.0,
        }
    }

    /// Rejects bad configurations before any run starts.
    fn check(&self, job: &Job) -> Result<(), Failure> {
        let m = self.model;
        if m.budget == 0 || m.rebuild_period == 0 || self.stream.batch_size == 0 || self.stream.epochs == 0 {
            return Err(usage("budget, rebuild period, batch size and epochs must be positive"));
        }
        if !(m.sigma > 0.0 && m.sigma.is_finite() && m.jitter > 0.0 && m.jitter.is_finite()) {
            return Err(usage("sigma and jitter must be positive and finite"));
        }
        if !(self.stream.drift_rate >= 0.0 && self.stream.drift_rate.is_finite()) {
            return Err(usage("drift rate must be finite and non-negative"));
        }
        if job.imbalance == 0 {
            return Err(usage("imbalance must be at least 1"));
        }
        self.run_config(job).params.validate().map_err(usage)?;
        self.stream_config(job).map_err(|e| usage(e.to_string()))?;
        Ok(())
    }

    fn execute(&self, job: &Job, train: &Dataset, test: &Dataset) -> anyhow::Result<ResultRow> {
        let stream = self.stream_config(job)?;
        let run = self.run_config(job);
        let selection = run_selection(train, &stream, &run, |_, _, _| {})
            .with_context(|| format!("{} seed {} failed", job.selector, job.seed))?;
        let report = evaluate(&selection, test, &stream, run.jitter)?;
        Ok(ResultRow {
            relearn_accuracy: report.relearn_accuracy,
            class_variance: report.class_variance,
            final_reservoir_n: report.reservoir_count_trace.last().map_or(0, |&(_, n)| n),
            wall_ms: report.wall_ms,
            ..self.blank_row(job)
        })
    }
}

pub fn run(args: &RunArgs) -> CmdResult {
    if args.model.gamma_l.is_some() && !args.selector.uses_learnability_threshold() {
        return Err(usage(format!("--gamma-l applies only to infogs and infogs-rs, not {}", args.selector)));
    }
    let jobs: Vec<Job> = args
        .stream
        .seeds
        .0
        .iter()
        .map(|&seed| Job { selector: args.selector, eta: args.eta, gamma_i: args.gamma_i, imbalance: args.imbalance, seed })
        .collect();
    let (train, test) = load_data(&args.data)?;
    let plan = Plan { model: &args.model, stream: &args.stream, n_classes: train.n_classes() };
    for job in &jobs {
        plan.check(job)?;
    }
    let mut sink = match &args.out {
        Some(path) => results::open_append(path)?,
        None => results::stdout_sink(),
    };
    for job in &jobs {
        let row = plan.execute(job, &train, &test)?;
        sink.write(&row)?;
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> CmdResult {
    if args.model.gamma_l.is_some() && !args.selector.iter().any(|k| k.uses_learnability_threshold()) {
        return Err(usage("--gamma-l given but no selected selector uses it"));
    }
    let (train, test) = load_data(&args.data)?;
    let plan = Plan { model: &args.model, stream: &args.stream, n_classes: train.n_classes() };

    // Baselines ignore η and γ_i, so they get one cell per (imbalance, seed).
    let mut jobs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for &selector in &args.selector {
        for &eta in &args.eta {
            for &gamma_i in &args.gamma_i {
                for &imbalance in &args.imbalance {
                    for &seed in &args.stream.seeds.0 {
                        let job = Job { selector, eta, gamma_i, imbalance, seed };
                        if seen.insert(plan.key(&job)) {
                            jobs.push(job);
                        }
                    }
                }
            }
        }
    }
    for job in &jobs {
        plan.check(job)?;
    }
    let done = results::existing_keys(&args.out)?;
    let total = jobs.len();
    jobs.retain(|j| !done.contains(&plan.key(j)));
    let mut sink = results::open_append(&args.out)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| usage(format!("cannot start {:?} threads: {e}", args.threads)))?;
    let (tx, rx) = mpsc::channel::<ResultRow>();
    let mut written = 0;
    let outcome = std::thread::scope(|scope| {
        let workers = scope.spawn(|| {
            pool.install(|| jobs.par_iter().try_for_each_with(tx, |tx, job| {
                let row = plan.execute(job, &train, &test)?;
                tx.send(row).map_err(|_| anyhow!("result writer stopped"))
            }))
        });
        let mut write_result = Ok(());
        for row in rx {
            if write_result.is_ok() {
                write_result = sink.write(&row);
                written += 1;
            }
        }
        let run_result = workers.join().unwrap_or_else(|_| Err(anyhow!("a sweep worker panicked")));
        run_result.and(write_result)
    });
    eprintln!("{written} rows written, {} already present, {total} cells", total - jobs.len());
    Ok(outcome?)
}

pub fn demo_gp(args: &DemoGpArgs) -> CmdResult {
    let config = GpToyConfig { n_draws: args.draws, seed: args.seed, ..GpToyConfig::default() };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let report = gp_toy(&config).context("gp toy failed")?;
    println!("draws: {}", report.n_draws);
    for p in &report.probes {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "probe ({}, {}): mean surprise {:.4}, mean learnability {:.4}, above held-in median in {}/{} draws",
            p.point.0,
            p.point.1,
            mean(&p.surprise),
            mean(&p.learnability),
            p.exceeds_median,
            report.n_draws
        );
    }
    println!("all probes above held-in median: {}/{}", report.all_probes_exceed, report.n_draws);
    println!(
        "learnability win rate: {}/{} = {:.3}",
        report.learnability_wins,
        report.n_draws,
        report.learnability_win_rate()
    );
    if let Some(path) = &args.emit_curves {
        let curves = gp_curves(&config, args.curve_points).context("gp curves failed")?;
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_gp_curves(&curves, file).with_context(|| format!("cannot write {}", path.display()))?;
        eprintln!("wrote {} curve points to {}", curves.len(), path.display());
    }
    Ok(())
}

fn bench_stream(args: &BenchArgs) -> Result<StreamConfig, Failure> {
    let mut stream = StreamConfig::contiguous(args.classes, args.tasks).map_err(|e| usage(e.to_string()))?;
    stream.batch_size = args.batch_size;
    stream.seed = args.seed;
    Ok(stream)
}

fn best_wall(data: &Dataset, stream: &StreamConfig, kind: SelectorKind, budget: usize, reps: usize) -> anyhow::Result<Duration> {
    let run = RunConfig::new(kind, budget);
    let mut best = Duration::MAX;
    for _ in 0..reps {
        best = best.min(run_selection(data, stream, &run, |_, _, _| {})?.wall);
    }
    Ok(best)
}

/// Microseconds per MIC evaluation against a full reservoir memory.
fn mic_us_per_point(args: &BenchArgs, d0: usize) -> anyhow::Result<f64> {
    let data = synth_gaussian_mixture(args.classes, d0, args.per_class, 4.0, 0.0, 0.0, args.seed)?.dataset;
    let stream = bench_stream(args).map_err(|_| anyhow!("bad stream"))?;
    let memory = run_selection(&data, &stream, &RunConfig::new(SelectorKind::Rs, args.budget), |_, _, _| {})?.memory;
    let posterior = memory.posterior();
    let points = (0..data.len())
        .map(|i| infosel::memory::MemoryItem::new(i as u64, i, data.row_f64(i), data.label(i), data.n_classes()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = f64::INFINITY;
    let mut sink = 0.0;
    for _ in 0..args.reps.max(1) {
        let start = Instant::now();
        for p in &points {
            sink += posterior.mic(&p.feature, &p.one_hot, 1.0);
        }
        best = best.min(start.elapsed().as_secs_f64() * 1e6 / points.len() as f64);
    }
    anyhow::ensure!(sink.is_finite(), "non-finite scores");
    Ok(best)
}

pub fn bench(args: &BenchArgs) -> CmdResult {
    let m = MixtureArgs {
        classes: args.classes,
        per_class: args.per_class,
        d0: args.d0,
        separation: 4.0,
        outlier_fraction: 0.0,
        outlier_scale: 0.0,
    };
    check_mixture(&m)?;
    if args.budget == 0 || args.batch_size == 0 || args.reps == 0 {
        return Err(usage("budget, batch size and reps must be positive"));
    }
    let stream = bench_stream(args)?;
    let data = sample_mixture(&m, args.seed)?;

    let mut kinds = vec![SelectorKind::Rs];
    kinds.extend(args.selector.iter().copied().filter(|&k| k != SelectorKind::Rs));
    println!("{} points, d0 = {}, M = {}, best of {}", data.len(), args.d0, args.budget, args.reps);
    println!("{:<12} {:>12} {:>10}", "selector", "wall_ms", "vs rs");
    let rs = best_wall(&data, &stream, SelectorKind::Rs, args.budget, args.reps)?;
    for kind in kinds {
        let wall = if kind == SelectorKind::Rs { rs } else { best_wall(&data, &stream, kind, args.budget, args.reps)? };
        println!("{:<12} {:>12.2} {:>9.2}x", kind.as_str(), wall.as_secs_f64() * 1e3, wall.as_secs_f64() / rs.as_secs_f64());
    }
    let t = mic_us_per_point(args, args.d0)?;
    let t2 = mic_us_per_point(args, 2 * args.d0)?;
    println!("mic scoring: {t:.3} us/point at d0 = {}, {t2:.3} us/point at d0 = {} ({:.2}x)", args.d0, 2 * args.d0, t2 / t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::Seeds;
    use infosel::selectors::Criterion;

    #[test]
    fn starred_task_rotates_with_the_seed() {
        let model = ModelArgs { budget: 10, criterion: Criterion::Mic, gamma_l: None, sigma: 0.3, jitter: 0.1, rebuild_period: 512 };
        let mut stream =
            StreamArgs { tasks: 3, epochs: 1, starred_task: None, batch_size: 10, drift_rate: 0.0, seeds: Seeds(vec![0]) };
        let job = |seed| Job { selector: SelectorKind::Rs, eta: 1.0, gamma_i: 0.0, imbalance: 10, seed };
        let plan = Plan { model: &model, stream: &stream, n_classes: 6 };
        let starred: Vec<_> = (0..7).map(|s| plan.stream_config(&job(s)).unwrap().starred_task).collect();
        assert_eq!(starred, [0, 1, 2, 0, 1, 2, 0].map(Some));
        stream.starred_task = Some(1);
        let plan = Plan { model: &model, stream: &stream, n_classes: 6 };
        assert_eq!(plan.stream_config(&job(5)).unwrap().starred_task, Some(1));
    }

    #[test]
    fn synth_spec_parsing() {
        let (m, seed) = parse_synth("synth:classes=4,d0=3,seed=9").ok().unwrap().unwrap();
        assert_eq!((m.classes, m.d0, m.per_class, seed), (4, 3, 500, 9));
        assert!(parse_synth("data.bin").ok().unwrap().is_none());
        assert!(parse_synth("synthetic.bin").ok().unwrap().is_none());
        assert!(matches!(parse_synth("synth:foo=1"), Err(Failure::Usage(_))));
        assert!(matches!(parse_synth("synth:outliers=1.5"), Err(Failure::Usage(_))));
    }
}
