//! `viserec score`: align hypothesis labels to references and report
//! correctness, accuracy and the confusion matrix.

use super::print_resolved;
use clap::Args;
use std::collections::BTreeSet;
use std::path::PathBuf;
use viserec::scoring::{align_labels, confusion, score, EditCosts};
use viserec::viseme::{read_label_file, VisemeMap};
use viserec::{Error, Result};

#[derive(Args)]
pub struct ScoreArgs {
    /// Reference label file (utterances separated by blank lines).
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Hypothesis label file with matching utterance count.
    #[arg(long)]
    pub hyp: PathBuf,
    /// Viseme map providing the confusion label list; defaults to the
    /// labels observed in the inputs.
    #[arg(long = "viseme-map")]
    pub viseme_map: Option<PathBuf>,
    /// Labels to drop from both sides before scoring (e.g. `sp`).
    #[arg(long)]
    pub strip: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ScoreArgs) -> Result<()> {
    let out = crate::resolve_out(args.out);
    print_resolved(&[
        ("ref", args.reference.display().to_string()),
        ("hyp", args.hyp.display().to_string()),
        ("out", out.display().to_string()),
        ("strip", args.strip.join(" ")),
    ]);
    let refs = read_label_file(&args.reference)?;
    let hyps = read_label_file(&args.hyp)?;
    if refs.len() != hyps.len() {
        return Err(Error::InvalidParameter(format!(
            "{} reference utterances but {} hypotheses",
            refs.len(),
            hyps.len()
        )));
    }
    let keep = |labels: Vec<String>| -> Vec<String> {
        labels
            .into_iter()
            .filter(|l| !args.strip.contains(l))
            .collect()
    };
    let alignments: Vec<_> = refs
        .iter()
        .zip(&hyps)
        .map(|(r, h)| align_labels(&keep(r.labels()), &keep(h.labels()), &EditCosts::default()))
        .collect();
    let report = score(&alignments)?;
    let labels: Vec<String> = match &args.viseme_map {
        Some(path) => VisemeMap::read(path)?
            .class_ids()
            .map(|id| id.as_str().to_string())
            .filter(|l| !args.strip.contains(l))
            .collect(),
        None => {
            let mut set = BTreeSet::new();
            for t in refs.iter().chain(&hyps) {
                for l in t.labels() {
                    if !args.strip.contains(&l) {
                        set.insert(l);
                    }
                }
            }
            set.into_iter().collect()
        }
    };
    let cm = confusion(&alignments, &labels)?;
    report.write(&out.join("score.txt"))?;
    cm.write(&out.join("confusion.csv"))?;
    println!(
        "score: N {} H {} D {} S {} I {} correctness {:.4} accuracy {:.4}",
        report.n, report.h, report.d, report.s, report.i, report.correctness, report.accuracy
    );
    Ok(())
}
