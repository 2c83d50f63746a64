//! `vak`: split, calibrate, predict, evaluate, chart, synthesize and compare
//! classifier scores from the command line.
//!
//! Every command reads and writes files only, records a JSON manifest next to
//! its primary output (`<output>.manifest`) and exits with 0 on success, 1 on
//! a validation or usage error and 2 on a filesystem error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vak_core::chart::DEFAULT_GRID_STEP;
use vak_core::metrics::{DEFAULT_NUM_BINS, DEFAULT_THRESHOLD};
use vak_core::{Distortion, Latent, DEFAULT_PROPER_FRACTION};

mod commands;
pub mod manifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "vak",
    version,
    about = "Venn-ABERS calibration of binary classifier scores"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Shuffle a labeled score file into proper-training and calibration parts.
    Split(SplitArgs),
    /// Fit a calibrator on a labeled calibration score file.
    Calibrate(CalibrateArgs),
    /// Calibrate test scores with a saved calibrator.
    Predict(PredictArgs),
    /// Compute calibration and accuracy metrics for a probability file.
    Evaluate(EvaluateArgs),
    /// Draw a reliability bubble chart (SVG or CSV, by output extension).
    Chart(ChartArgs),
    /// Generate synthetic miscalibrated scores with known truth.
    Synth(SynthArgs),
    /// Compare raw and calibrated probabilities, one report row per trial.
    Compare(CompareArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    pub input: PathBuf,
    pub out_proper: PathBuf,
    pub out_calibration: PathBuf,
    /// Share of rows kept for proper training.
    #[arg(long, default_value_t = DEFAULT_PROPER_FRACTION)]
    pub fraction: f64,
    #[arg(long, env = "VAK_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    pub calibration_scores: PathBuf,
    pub out_model: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub test_scores: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Prediction file (`merged` column) or score file of probabilities.
    pub predictions: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NUM_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Also report RMSE and R² against the `target` column.
    #[arg(long)]
    pub degree: bool,
    /// JSON report destination; the text report goes to stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ChartArgs {
    pub predictions: PathBuf,
    /// `.svg` or `.csv`.
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    pub out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, env = "VAK_SEED", default_value_t = 0)]
    pub seed: u64,
    /// `identity`, `overconfident:A` (A > 1) or `underconfident:A` (0 < A < 1).
    #[arg(long, default_value = "identity")]
    pub distortion: Distortion,
    /// `uniform` or `bimodal:MIX:SPREAD`.
    #[arg(long, default_value = "uniform")]
    pub latent: Latent,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Raw probabilities; repeat once per trial.
    #[arg(long, required = true)]
    pub raw: Vec<PathBuf>,
    /// Calibrated probabilities; repeat once per trial, in the same order.
    #[arg(long, required = true)]
    pub ivap: Vec<PathBuf>,
    /// Labeled score file overriding the labels in the probability files.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_NUM_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// JSON report destination; the text summary goes to stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

/// Exit status for an error: 2 if any cause is a filesystem failure, else 1.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let io = err.chain().any(|cause| {
        cause.downcast_ref::<std::io::Error>().is_some()
            || cause
                .downcast_ref::<vak_core::Error>()
                .is_some_and(vak_core::Error::is_io)
    });
    if io {
        EXIT_IO
    } else {
        EXIT_INVALID
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let argv = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match commands::run(cli.command, argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
