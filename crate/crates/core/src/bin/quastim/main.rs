//! Command-line driver for the photon-statistics imaging pipeline.
//!
//! Subcommands cover the full workflow: `gen-data`, `train`, `eval` and
//! `eval-curve` for the classifier; `simulate` and `classify` for scenes;
//! `sweep` for the separation comparison; `fit-dist` for source-allocation
//! fits; `features` for feature-space exports.
//!
//! Contract shared by every command:
//!
//! * exit codes: 0 success, 2 usage error, 3 I/O failure, 4 domain or
//!   format error;
//! * every output file begins with a provenance header naming the tool
//!   version, the command line, and the seed;
//! * identical flags and seed reproduce every output byte for byte;
//! * settings resolve flag first, then config file, then built-in default;
//!   the `QUASTIM_OUT_DIR` environment variable supplies only the default
//!   output directory.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quastim::Error;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Failures after argument parsing, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Semantically invalid flags or inputs the user must fix: exit 2.
    Usage(String),
    /// Library errors: exit 3 for I/O, 4 for domain and format problems.
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::Io(_)) => 3,
            CliError::Core(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Core(Error::Io(e))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "quastim",
    version,
    about = "Superresolution imaging via per-pixel photon statistics"
)]
pub struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (default: $QUASTIM_OUT_DIR, then the working directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the five-class corpus: train/validation/test CSVs + manifest.
    GenData(GenDataArgs),
    /// Train the classifier on a generated dataset directory.
    Train(TrainArgs),
    /// Evaluate a model on a labeled CSV; writes the confusion matrix.
    Eval(EvalArgs),
    /// Train and evaluate across a list of shots-per-histogram values.
    EvalCurve(EvalCurveArgs),
    /// Raster-scan a scene into per-pixel histograms and an intensity image.
    Simulate(SimulateArgs),
    /// Simulate a scene and classify every pixel's photon statistics.
    Classify(ClassifyArgs),
    /// Two-emitter separation sweep: classified fit vs direct Gaussian fit.
    Sweep(SweepArgs),
    /// Fit source allocations to a measured photon-number distribution.
    FitDist(FitDistArgs),
    /// Export projected feature-space scatter data per class and shot count.
    Features(FeaturesArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Shots per histogram (default 3500).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Histograms per class (default 1000).
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram truncation (default 20).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Log-uniform per-histogram brightness jitter "lo,hi" (default off).
    #[arg(long, value_parser = parse_jitter, value_name = "LO,HI")]
    pub brightness_jitter: Option<(f64, f64)>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding train.csv and validation.csv.
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,
    /// Weight-initialization and shuffle seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Epoch cap (default 5000).
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Early-stopping patience in epochs (default 1000).
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trained model JSON.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Labeled feature CSV to score, e.g. a test split.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalCurveArgs {
    /// Comma-separated shots-per-histogram values
    /// (default 100,500,1000,3500,10000).
    #[arg(long, value_delimiter = ',', value_name = "D,...")]
    pub shots: Option<Vec<u64>>,
    /// Histograms per class at each point (default 1000).
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Epoch cap per training run (default 5000).
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Early-stopping patience in epochs (default 1000).
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene JSON file.
    #[arg(long, value_name = "PATH")]
    pub scene: PathBuf,
    /// Shots per pixel; overrides the scene file's value (default 10000).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Master seed; overrides the scene file's value (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Scene JSON file.
    #[arg(long, value_name = "PATH")]
    pub scene: PathBuf,
    /// Trained model JSON.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Shots per pixel; overrides the scene file's value (default 10000).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Master seed; overrides the scene file's value (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mean photon number below which a pixel is background (default 0.05).
    #[arg(long)]
    pub background_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Trained model JSON.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Comma-separated true separations in w0 units (default 0.3..2.0
    /// step 0.1).
    #[arg(long, value_delimiter = ',', value_name = "S,...")]
    pub separations: Option<Vec<f64>>,
    /// Scans per separation (default 10).
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Shots per pixel (default 10000).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Square grid edge in pixels (default 64).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Peak mean photon number of both emitters (default 1.2).
    #[arg(long)]
    pub peak_mean: Option<f64>,
    /// Background threshold for the class map (default 0.05).
    #[arg(long)]
    pub background_threshold: Option<f64>,
    /// Reported direct separation on diffraction-limited scans (default 1.0).
    #[arg(long)]
    pub plateau_separation: Option<f64>,
    /// Clear space beyond each emitter in w0 units (default 1.6).
    #[arg(long)]
    pub margin: Option<f64>,
    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Component cap for the direct fit (default 2).
    #[arg(long)]
    pub max_components: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitDistArgs {
    /// Histogram CSV (n,count) or distribution CSV (n,p).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Mean-photon grid resolution of the search (default 0.05).
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Residual window upper photon number (default 6).
    #[arg(long)]
    pub n_fit_max: Option<usize>,
    /// Distinguishable-mode cap (default 3).
    #[arg(long)]
    pub max_modes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Comma-separated shots-per-histogram values (default 10,100,1000,10000).
    #[arg(long, value_delimiter = ',', value_name = "D,...")]
    pub shots_list: Option<Vec<u64>>,
    /// Sampled points per class per shots value (default 200).
    #[arg(long)]
    pub per_point: Option<usize>,
    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram truncation (default 20).
    #[arg(long)]
    pub n_max: Option<usize>,
}

fn parse_jitter(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"lo,hi\", got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("{lo:?} is not a number"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("{hi:?} is not a number"))?;
    Ok((lo, hi))
}
