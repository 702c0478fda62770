//! `viserec synth`: generate a synthetic corpus with known ground truth.

use super::print_resolved;
use clap::Args;
use std::path::PathBuf;
use viserec::corpus::{generate_corpus, SyntheticSpec};
use viserec::Result;

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed; all sampling flows from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corpus lines to generate.
    #[arg(long, default_value_t = 108)]
    pub lines: usize,
    /// Viseme classes (silence and short pause are added on top).
    #[arg(long, default_value_t = 15)]
    pub classes: usize,
    /// Class mean separation in units of the within-class deviation.
    #[arg(long, default_value_t = 6.0)]
    pub separation: f64,
    /// Vocabulary size.
    #[arg(long, default_value_t = 10)]
    pub words: usize,
    /// Probability of a realized inter-word short pause.
    #[arg(long = "sp-prob", default_value_t = 0.3)]
    pub sp_prob: f64,
}

pub fn run(args: SynthArgs) -> Result<()> {
    let out = crate::resolve_out(args.out);
    print_resolved(&[
        ("out", out.display().to_string()),
        ("seed", args.seed.to_string()),
        ("lines", args.lines.to_string()),
        ("classes", args.classes.to_string()),
        ("separation", args.separation.to_string()),
        ("words", args.words.to_string()),
        ("sp_prob", args.sp_prob.to_string()),
    ]);
    let mut spec = SyntheticSpec::desk_default(args.classes, args.lines, args.separation, args.seed);
    spec.n_words = args.words;
    spec.sp_probability = args.sp_prob;
    let corpus = generate_corpus(&spec)?;
    corpus.write(&out)?;
    let frames: usize = corpus.utterances.iter().map(|u| u.frames.len()).sum();
    println!(
        "synth: {} lines, {} frames, manifest at {}",
        corpus.n_lines(),
        frames,
        out.join("corpus.manifest").display()
    );
    Ok(())
}
