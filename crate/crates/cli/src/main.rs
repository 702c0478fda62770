//! Command-line surface of the viseme recognition toolkit.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use viserec::Error;

/// Viseme recognition toolkit: mapping, linear feature models, GMM-HMM
/// training, bigram decoding, scoring and fragility analysis.
#[derive(Parser)]
#[command(name = "viserec", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert word transcripts to viseme transcripts and count visemes.
    Map(commands::map::MapArgs),
    /// Generate a synthetic corpus with known ground truth.
    Synth(commands::synth::SynthArgs),
    /// Train models on a corpus (no held-out folds).
    Train(commands::train::TrainArgs),
    /// Force-align a corpus with trained models.
    Align(commands::align::AlignArgs),
    /// Decode a corpus with trained models and a word network.
    Decode(commands::decode::DecodeArgs),
    /// Score hypothesis labels against reference labels.
    Score(commands::score::ScoreArgs),
    /// Analyze per-fold results: probabilities, rankings, correlations.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Run the full cross-validated recipe end to end.
    Run(commands::run::RunArgs),
    /// Train or apply linear shape/appearance feature models.
    Features(commands::features::FeaturesArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Map(args) => commands::map::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Align(args) => commands::align::run(args),
        Command::Decode(args) => commands::decode::run(args),
        Command::Score(args) => commands::score::run(args),
        Command::Analyze(args) => commands::analyze::run(args),
        Command::Run(args) => commands::run::run(args),
        Command::Features(args) => commands::features::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("viserec: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Exit codes: 2 missing/unreadable files, 3 dimension mismatches,
/// 4 decode/alignment failures, 1 anything else.
fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io { .. } => 2,
        Error::DimensionMismatch { .. } => 3,
        Error::DecodeFailure(_) | Error::InfeasibleAlignment { .. } => 4,
        _ => 1,
    }
}

/// The default output directory: `--out` when given, else the environment
/// variable `VISEREC_OUT`, else `./out`.
pub(crate) fn resolve_out(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os("VISEREC_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}
