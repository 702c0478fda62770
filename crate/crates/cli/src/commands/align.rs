//! `viserec align`: force-align every corpus line with trained models.

use super::print_resolved;
use clap::Args;
use std::path::PathBuf;
use viserec::corpus::{word_expansions, Corpus};
use viserec::hmm::{force_align, AlignOptions, ModelSet};
use viserec::textio;
use viserec::viseme::{write_label_file, Transcript, Unit, VisemeMap};
use viserec::{Error, Result};

#[derive(Args)]
pub struct AlignArgs {
    /// Corpus manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Trained model-set file.
    #[arg(long)]
    pub models: PathBuf,
    /// Merged viseme map the models were trained with.
    #[arg(long = "viseme-map")]
    pub viseme_map: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: AlignArgs) -> Result<()> {
    let out = crate::resolve_out(args.out);
    print_resolved(&[
        ("manifest", args.manifest.display().to_string()),
        ("models", args.models.display().to_string()),
        ("viseme_map", args.viseme_map.display().to_string()),
        ("out", out.display().to_string()),
    ]);
    let corpus = Corpus::read(&args.manifest)?;
    let models = ModelSet::read(&args.models)?;
    let merged = VisemeMap::read(&args.viseme_map)?;
    let expansions = word_expansions(&corpus, &merged)?;
    let sil = merged
        .silence_id()
        .ok_or_else(|| Error::MissingModel("sil".to_string()))?
        .as_str()
        .to_string();
    let sp = merged
        .short_pause_id()
        .ok_or_else(|| Error::MissingModel("sp".to_string()))?
        .as_str()
        .to_string();
    let opts = AlignOptions {
        boundary_silence: true,
        optional_short_pause: true,
        sil_label: sil,
        sp_label: sp,
        record_states: false,
    };
    let mut transcripts = Vec::with_capacity(corpus.n_lines());
    for utt in &corpus.utterances {
        let aligned = force_align(&models, &utt.frames, &utt.words, &expansions, &opts)?;
        transcripts.push(Transcript {
            units: aligned
                .segments
                .iter()
                .map(|s| Unit {
                    label: s.label.clone(),
                    start: Some(s.start),
                    end: Some(s.end),
                    word_start: false,
                })
                .collect(),
        });
    }
    textio::write_file(&out.join("aligned.lab"), &write_label_file(&transcripts))?;
    println!(
        "align: {} utterances, labels in {}",
        transcripts.len(),
        out.join("aligned.lab").display()
    );
    Ok(())
}
