//! `viserec decode`: recognize every corpus line against a word network.

use super::print_resolved;
use clap::Args;
use std::path::PathBuf;
use viserec::corpus::Corpus;
use viserec::hmm::{viterbi_decode, DecodeParams, ModelSet};
use viserec::lm::WordNetwork;
use viserec::textio;
use viserec::viseme::write_label_file;
use viserec::Result;

#[derive(Args)]
pub struct DecodeArgs {
    /// Corpus manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Trained model-set file.
    #[arg(long)]
    pub models: PathBuf,
    /// Word network file.
    #[arg(long)]
    pub network: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Language-model scale factor.
    #[arg(long = "lm-scale", default_value_t = 1.0)]
    pub lm_scale: f64,
    /// Per-word insertion penalty.
    #[arg(long = "insertion-penalty", default_value_t = 0.0)]
    pub insertion_penalty: f64,
}

pub fn run(args: DecodeArgs) -> Result<()> {
    let out = crate::resolve_out(args.out);
    print_resolved(&[
        ("manifest", args.manifest.display().to_string()),
        ("models", args.models.display().to_string()),
        ("network", args.network.display().to_string()),
        ("out", out.display().to_string()),
        ("lm_scale", args.lm_scale.to_string()),
        ("insertion_penalty", args.insertion_penalty.to_string()),
    ]);
    let corpus = Corpus::read(&args.manifest)?;
    let models = ModelSet::read(&args.models)?;
    let network = WordNetwork::read(&args.network)?;
    let params = DecodeParams {
        lm_scale: args.lm_scale,
        insertion_penalty: args.insertion_penalty,
    };
    let mut transcripts = Vec::with_capacity(corpus.n_lines());
    let mut words_out = String::new();
    let mut scores = String::new();
    for utt in &corpus.utterances {
        let decoded = viterbi_decode(&models, &network, &utt.frames, &params)?;
        words_out.push_str(&decoded.words.join(" "));
        words_out.push('\n');
        scores.push_str(&format!("{}\n", textio::fmt_f64(decoded.log_score)));
        transcripts.push(decoded.transcript);
    }
    textio::write_file(&out.join("hyp.lab"), &write_label_file(&transcripts))?;
    textio::write_file(&out.join("hyp_words.txt"), &words_out)?;
    textio::write_file(&out.join("hyp_scores.txt"), &scores)?;
    println!(
        "decode: {} utterances, hypotheses in {}",
        transcripts.len(),
        out.display()
    );
    Ok(())
}
