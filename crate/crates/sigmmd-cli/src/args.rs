//! Flag definitions for the `sigmmd` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sigmmd::{DatasetConfig, DatasetKind, KernelPreset};

/// Two-sample testing for sequential data with truncated signature kernels.
#[derive(Debug, Parser)]
#[command(name = "sigmmd", version, about)]
pub struct Cli {
    /// Cap the worker thread pool. Only meaningful in builds with the
    /// `parallel` feature; outputs never depend on the thread count.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a batch of synthetic sequences and write it as CSV.
    Gen(GenArgs),
    /// Run one two-sample test and emit a JSON report.
    Test(TestArgs),
    /// Tabulate the test statistic under H0 and H1 over many repetitions.
    Histogram(HistogramArgs),
}

/// Generator parameters shared by all subcommands that synthesize data.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GenParams {
    /// Observations per sequence.
    #[arg(long, default_value_t = 101)]
    pub length: usize,

    /// Dependence window of the path-dependent walk.
    #[arg(long, default_value_t = 3)]
    pub w: usize,

    /// Full revolutions of the circle signal.
    #[arg(long, default_value_t = 10)]
    pub k_spins: usize,

    /// Circle radius.
    #[arg(long, default_value_t = 0.8)]
    pub r: f64,

    /// Noise standard deviation (0 gives the noiseless signal).
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,

    /// Standard deviation of each circle-origin coordinate.
    #[arg(long, default_value_t = 5.0)]
    pub origin_std: f64,
}

impl GenParams {
    /// Full dataset description for one group.
    pub fn config(&self, kind: DatasetKind, seed: u64) -> DatasetConfig {
        DatasetConfig {
            kind,
            length: self.length,
            w: self.w,
            k_spins: self.k_spins,
            r: self.r,
            sigma: self.sigma,
            origin_std: self.origin_std,
            seed,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Dataset family: random_walk, path_dependent_walk, circle_signal,
    /// pure_noise.
    #[arg(long, value_parser = parse_kind)]
    pub kind: DatasetKind,

    /// Number of sequences in the batch.
    #[arg(long, default_value_t = 50)]
    pub m: usize,

    #[command(flatten)]
    pub params: GenParams,

    /// Base seed; sequence i of the batch uses stream i.
    #[arg(long, env = "SIGMMD_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TestArgs {
    /// CSV file with the first group (alternative to --x-kind).
    #[arg(long, conflicts_with = "x_kind")]
    pub x_file: Option<PathBuf>,

    /// Generator for the first group.
    #[arg(long, value_parser = parse_kind)]
    pub x_kind: Option<DatasetKind>,

    /// CSV file with the second group (alternative to --y-kind).
    #[arg(long, conflicts_with = "y_kind")]
    pub y_file: Option<PathBuf>,

    /// Generator for the second group.
    #[arg(long, value_parser = parse_kind)]
    pub y_kind: Option<DatasetKind>,

    /// Samples per generated group (file inputs bring their own count).
    #[arg(long, default_value_t = 50)]
    pub m: usize,

    #[command(flatten)]
    pub params: GenParams,

    /// Kernel preset: sig-euclid, sig-rbf, flat-rbf.
    #[arg(long, value_parser = parse_preset)]
    pub kernel: KernelPreset,

    /// Number of permutations for the Monte Carlo p-value.
    #[arg(long, default_value_t = 250)]
    pub n_perms: usize,

    /// Test level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Seed for permutations, bandwidth subsampling, and derived generator
    /// seeds.
    #[arg(long, env = "SIGMMD_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Generator seed for the first group (default: derived from --seed).
    #[arg(long)]
    pub x_seed: Option<u64>,

    /// Generator seed for the second group (default: derived from --seed).
    #[arg(long)]
    pub y_seed: Option<u64>,

    /// Randomly delete ticks from every sequence down to a retained count
    /// drawn uniformly from [MIN, MAX]. Generated groups only.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
    pub downsample: Option<Vec<usize>>,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct HistogramArgs {
    /// Generator for the null family (both H0 groups and the first H1
    /// group).
    #[arg(long, value_parser = parse_kind)]
    pub x_kind: DatasetKind,

    /// Generator for the alternative family (second H1 group).
    #[arg(long, value_parser = parse_kind)]
    pub y_kind: DatasetKind,

    /// Samples per group.
    #[arg(long, default_value_t = 50)]
    pub m: usize,

    #[command(flatten)]
    pub params: GenParams,

    /// Kernel preset: sig-euclid, sig-rbf, flat-rbf.
    #[arg(long, value_parser = parse_preset)]
    pub kernel: KernelPreset,

    /// Repetitions; each contributes one H0 row and one H1 row.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    /// Base seed for all derived generator and bandwidth streams.
    #[arg(long, env = "SIGMMD_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<DatasetKind, String> {
    match s {
        "random_walk" => Ok(DatasetKind::RandomWalk),
        "path_dependent_walk" => Ok(DatasetKind::PathDependentWalk),
        "circle_signal" => Ok(DatasetKind::CircleSignal),
        "pure_noise" => Ok(DatasetKind::PureNoise),
        other => Err(format!(
            "unknown dataset kind '{other}' (expected random_walk, \
             path_dependent_walk, circle_signal, or pure_noise)"
        )),
    }
}

fn parse_preset(s: &str) -> Result<KernelPreset, String> {
    match s {
        "sig-euclid" => Ok(KernelPreset::SigEuclid),
        "sig-rbf" => Ok(KernelPreset::SigRbf),
        "flat-rbf" => Ok(KernelPreset::FlatRbf),
        other => Err(format!(
            "unknown kernel preset '{other}' (expected sig-euclid, sig-rbf, \
             or flat-rbf)"
        )),
    }
}
