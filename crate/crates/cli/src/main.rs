//! `stackfuse`: enumerate, run, score, compare and report.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "stackfuse",
    version,
    about = "Frame-stack preprocessing, fusion and quality scoring"
)]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the preprocessing sequences in canonical order.
    Enumerate,
    /// Run the sequence × projection grid over every video.
    Run {
        /// Root with one sub-directory of frames per video.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Only run these pipelines, e.g. `QP_CH_NF` (repeatable).
        #[arg(long = "pipeline")]
        pipelines: Vec<String>,
    },
    /// Score images with no-reference quality metrics.
    Score {
        /// Directory of images to score.
        #[arg(long, conflicts_with = "manifest")]
        input: Option<PathBuf>,
        /// Score the successful outputs listed in a run manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output CSV.
        #[arg(long)]
        output: PathBuf,
        /// piqe, niqe or brisque (repeatable).
        #[arg(long = "metric")]
        metrics: Vec<String>,
        /// Model file for the selected model-based metric.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Compare old and new ground-truth masks paired by file name.
    CompareGt {
        #[arg(long)]
        old: PathBuf,
        #[arg(long)]
        new: PathBuf,
        /// Directory for `gt_summary.csv` and `gt_areas.csv`.
        #[arg(long)]
        output: PathBuf,
        /// Count connected components instead of stored labels.
        #[arg(long)]
        relabel: bool,
        /// Use 4-connectivity when relabelling.
        #[arg(long)]
        four_connected: bool,
    },
    /// Descriptive statistics, SP/AP tests and pipeline ranking.
    Report {
        /// Score CSV written by `score`.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Keep PDP outputs in the tables.
        #[arg(long)]
        include_pdp: bool,
    },
    /// Fit a NIQE model on a directory of pristine images.
    FitNiqe {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
