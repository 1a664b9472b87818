use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use infosel::memory::DEFAULT_REBUILD_PERIOD;
use infosel::selectors::{Criterion, SelectorKind};

#[derive(Debug, Parser)]
#[command(name = "infosel", version, about = "Online memory selection runs, sweeps and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a Gaussian-mixture dataset and write it to disk.
    Gen(GenArgs),
    /// Run one selector configuration for each seed and append result rows.
    Run(RunArgs),
    /// Run the selector × imbalance × seed grid, skipping rows already present.
    Sweep(SweepArgs),
    /// Surprise / learnability toy on a one-dimensional Gaussian process.
    DemoGp(DemoGpArgs),
    /// Selection wall time per selector and per-point scoring latency.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MixtureArgs {
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 500)]
    pub per_class: usize,
    #[arg(long, default_value_t = 16)]
    pub d0: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub outlier_fraction: f64,
    #[arg(long, default_value_t = 0.5)]
    pub outlier_scale: f64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub mixture: MixtureArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; a `.csv` extension selects CSV, anything else MSL1 binary.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset file (`.csv` or MSL1 binary), or `synth[:key=value,...]` with
    /// keys classes, per-class, d0, separation, outliers, outlier-scale, seed.
    #[arg(long)]
    pub dataset: String,
    /// Fraction of every class held out for relearn evaluation.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct StreamArgs {
    #[arg(long, default_value_t = 5)]
    pub tasks: usize,
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    /// Task trained for `imbalance` times more epochs. Defaults to seed mod tasks.
    #[arg(long)]
    pub starred_task: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub drift_rate: f64,
    /// Seeds as a list (`0,3,7`) or half-open range (`0..20`).
    #[arg(long, default_value = "0", value_parser = parse_seeds)]
    pub seeds: Seeds,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, default_value_t = Criterion::Mic)]
    pub criterion: Criterion,
    /// Learnability threshold ratio; only infogs and infogs-rs use it.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_l: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub jitter: f64,
    #[arg(long, default_value_t = DEFAULT_REBUILD_PERIOD)]
    pub rebuild_period: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub selector: SelectorKind,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma_i: f64,
    #[arg(long, default_value_t = 1)]
    pub imbalance: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Result CSV, appended to. Rows go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub selector: Vec<SelectorKind>,
    #[arg(long, value_delimiter = ',', default_value = "1", allow_hyphen_values = true)]
    pub eta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
    pub gamma_i: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub imbalance: Vec<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Parallel runs (default: one per core).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemoGpArgs {
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write both predictive curves for each probe (first draw) to this CSV.
    #[arg(long)]
    pub emit_curves: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    pub curve_points: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 64)]
    pub d0: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 1000)]
    pub per_class: usize,
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, default_value_t = 5)]
    pub tasks: usize,
    #[arg(long, default_value_t = 10)]
    pub batch_size: usize,
    /// Selectors to time; rs is always included as the baseline.
    #[arg(long, value_delimiter = ',', default_value = "rs,cbrs,wrs-hessian,infors,infogs,infogs-rs")]
    pub selector: Vec<SelectorKind>,
    /// Timed repetitions; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let seeds: Vec<u64> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|e| format!("bad seed range start '{lo}': {e}"))?;
        let hi: u64 = hi.trim().parse().map_err(|e| format!("bad seed range end '{hi}': {e}"))?;
        (lo..hi).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(|e| format!("bad seed '{t}': {e}"))).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err("seed list is empty".into());
    }
    Ok(Seeds(seeds))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_accept_lists_and_ranges() {
        assert_eq!(parse_seeds("0..3").unwrap().0, vec![0, 1, 2]);
        assert_eq!(parse_seeds("5, 2,9").unwrap().0, vec![5, 2, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn negative_infinity_threshold_parses() {
        let cli = Cli::try_parse_from([
            "infosel", "run", "--dataset", "synth", "--selector", "infors", "--gamma-i", "-inf",
        ])
        .unwrap();
        let Command::Run(a) = cli.command else { panic!() };
        assert_eq!(a.gamma_i, f64::NEG_INFINITY);
    }
}
