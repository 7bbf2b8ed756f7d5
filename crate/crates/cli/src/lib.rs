//! The `scenestat` command line.
//!
//! Each subcommand wraps one pipeline stage and writes a run manifest next to
//! its output; `scenestat rerun <manifest>` repeats the run byte for byte.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 data or numerical error.

pub mod commands;
pub mod manifest;
pub mod svg;
pub mod synth;
pub mod tables;

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use scenestat_core::grid::ExtractionMode;
use scenestat_core::LogBase;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or unreadable / malformed input files.
    #[error("{0}")]
    Input(String),
    /// Well-formed input on which the computation cannot proceed.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "scenestat", version, about = "Natural scene statistics, algorithmic complexity and subjective randomness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Tally k×k binary patches over a corpus of PGM images.
    Scan(ScanArgs),
    /// Estimate CTM complexity of small patterns by sampling 2D Turing machines.
    Ctm(CtmArgs),
    /// Score patterns by BDM complexity and natural randomness.
    Score(ScoreArgs),
    /// Draw a frequency-weighted stimulus set.
    Sample(SampleArgs),
    /// Correlations, regression and mediation of judgments on the scores.
    Analyze(AnalyzeArgs),
    /// Run the experiment HTTP service.
    Serve(ServeArgs),
    /// Write a corpus of smoothed-noise PGM images.
    Synth(SynthArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    /// Directory of .pgm files, or a text file listing image paths.
    #[arg(long, env = "SCENESTAT_CORPUS")]
    pub corpus: PathBuf,
    /// Patch side (2, 3 or 4).
    #[arg(short, long, default_value_t = 4, env = "SCENESTAT_K")]
    pub k: usize,
    /// `tiled` (adjacent patches) or `sliding` (every position).
    #[arg(long, default_value_t = ExtractionMode::Tiled, env = "SCENESTAT_MODE")]
    pub mode: ExtractionMode,
    /// Frequency table CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CtmArgs {
    /// Pattern side (2 or 3).
    #[arg(short, long, default_value_t = 2, env = "SCENESTAT_CTM_K")]
    pub k: usize,
    #[arg(long, default_value_t = 4, env = "SCENESTAT_CTM_STATES")]
    pub states: usize,
    #[arg(long, default_value_t = 1_000_000, env = "SCENESTAT_CTM_SAMPLES")]
    pub samples: u64,
    /// Step budget per machine.
    #[arg(long, default_value_t = 200, env = "SCENESTAT_CTM_STEPS")]
    pub steps: u64,
    #[arg(long, default_value_t = 1, env = "SCENESTAT_CTM_SEED")]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScoreArgs {
    /// Frequency table from `scan`.
    #[arg(long)]
    pub freq: PathBuf,
    /// CTM table from `ctm`.
    #[arg(long)]
    pub ctm: PathBuf,
    /// Stimulus set from `sample`; every observed pattern if omitted.
    #[arg(long)]
    pub stimuli: Option<PathBuf>,
    /// Add-alpha smoothing of corpus frequencies.
    #[arg(long, default_value_t = 1.0, env = "SCENESTAT_ALPHA")]
    pub alpha: f64,
    /// BDM block side; must match the CTM table.
    #[arg(long, default_value_t = 2, env = "SCENESTAT_BLOCK")]
    pub block: usize,
    /// Logarithm base for natural randomness: `two` or `e`.
    #[arg(long, default_value = "two", value_parser = parse_base, env = "SCENESTAT_LOG_BASE")]
    pub log_base: LogBase,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub freq: PathBuf,
    /// Number of distinct patterns.
    #[arg(short, long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1, env = "SCENESTAT_STIMULUS_SEED")]
    pub seed: u64,
    /// Set id; defaults to one derived from side, size and seed.
    #[arg(long)]
    pub id: Option<String>,
    /// Corpus label recorded in the set; defaults to the frequency file name.
    #[arg(long)]
    pub corpus_id: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Scores from `score`.
    #[arg(long)]
    pub scores: PathBuf,
    /// Judgment export from the service.
    #[arg(long)]
    pub aggregates: PathBuf,
    /// Directory for the report, tables and plots.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ServeArgs {
    /// Existing directory holding `sets/` and the event log.
    #[arg(long, env = "SCENESTAT_DATA_DIR")]
    pub data_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080", env = "SCENESTAT_ADDR")]
    pub addr: SocketAddr,
    /// Seed for presentation orders.
    #[arg(long, default_value_t = 0, env = "SCENESTAT_MASTER_SEED")]
    pub seed: u64,
    /// Static files (the participant UI) served at `/`.
    #[arg(long, env = "SCENESTAT_STATIC_DIR")]
    pub static_dir: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(short, long, default_value_t = 100)]
    pub n: usize,
    /// Image side in pixels.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Box blur radius.
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    /// Number of blur passes.
    #[arg(long, default_value_t = 3)]
    pub passes: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

fn parse_base(s: &str) -> Result<LogBase, String> {
    match s {
        "two" | "2" => Ok(LogBase::Two),
        "e" => Ok(LogBase::E),
        other => Err(format!("unknown log base {other:?} (expected `two` or `e`)")),
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
