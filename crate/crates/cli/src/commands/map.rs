//! `viserec map`: word transcripts to viseme transcripts plus counts.

use super::print_resolved;
use clap::Args;
use std::path::PathBuf;
use viserec::textio;
use viserec::viseme::{
    count_visemes, words_to_visemes, write_label_file, Inventory, PronunciationDict, VisemeMap,
};
use viserec::{Error, Result};

#[derive(Args)]
pub struct MapArgs {
    /// Pronunciation dictionary (CMU-style `WORD  ph1 ph2 …`).
    #[arg(long)]
    pub dict: PathBuf,
    /// Viseme map file (`vID ph1 ph2 …`); defaults to the built-in map.
    #[arg(long = "viseme-map")]
    pub viseme_map: Option<PathBuf>,
    /// Word transcript file, one utterance per line.
    #[arg(long)]
    pub words: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the garbage-merged map under this sample threshold.
    #[arg(long)]
    pub threshold: Option<u64>,
}

pub fn run(args: MapArgs) -> Result<()> {
    let out = crate::resolve_out(args.out);
    let map = match &args.viseme_map {
        Some(path) => VisemeMap::read(path)?,
        None => VisemeMap::builtin_default(),
    };
    print_resolved(&[
        ("dict", args.dict.display().to_string()),
        (
            "viseme_map",
            args.viseme_map
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "builtin".to_string()),
        ),
        ("words", args.words.display().to_string()),
        ("out", out.display().to_string()),
        (
            "threshold",
            args.threshold.map(|t| t.to_string()).unwrap_or_default(),
        ),
    ]);

    let inventory = Inventory::of_map(&map);
    let dict = PronunciationDict::read(&args.dict, &inventory)?;
    let text = textio::read_file(&args.words)?;

    let lines: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split_whitespace().map(|w| w.to_string()).collect())
        .collect();
    let mut oov: Vec<String> = Vec::new();
    for words in &lines {
        for word in words {
            if dict.first(word).is_none() && !oov.contains(word) {
                oov.push(word.clone());
            }
        }
    }
    if !oov.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "out-of-vocabulary words: {}",
            oov.join(" ")
        )));
    }
    let mut transcripts = Vec::new();
    for words in &lines {
        transcripts.push(words_to_visemes(&dict, &map, words)?);
    }

    textio::write_file(&out.join("transcripts.lab"), &write_label_file(&transcripts))?;
    let counts = count_visemes(transcripts.iter(), &map)?;
    let mut csv = String::from("viseme,count\n");
    for (id, count) in &counts {
        csv.push_str(&format!("{id},{count}\n"));
    }
    textio::write_file(&out.join("counts.csv"), &csv)?;
    map.write(&out.join("visemes.map"))?;
    if let Some(threshold) = args.threshold {
        let merged = map.merge_below_threshold(&counts, threshold)?;
        merged.write(&out.join("merged.map"))?;
    }
    println!(
        "map: {} utterances, {} viseme tokens",
        transcripts.len(),
        counts.values().sum::<u64>()
    );
    Ok(())
}
