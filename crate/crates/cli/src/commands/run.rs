//! `viserec run`: the full cross-validated recipe, end to end.

use super::print_resolved;
use clap::Args;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use viserec::analysis::fold_stats;
use viserec::corpus::{make_folds, run_fold, Corpus, FoldOutcome, FoldSpec, RecipeConfig};
use viserec::textio;
use viserec::viseme::{write_label_file, Inventory, PronunciationDict, VisemeMap};
use viserec::{Error, Result};

#[derive(Args)]
pub struct RunArgs {
    /// Corpus manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Recipe config file (`key = value`); defaults apply otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed override for fold construction and the recipe.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fold-level worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Test lines per fold; defaults to 42/108 of the corpus.
    #[arg(long = "test-size")]
    pub test_size: Option<usize>,
    /// Replace the manifest's viseme map.
    #[arg(long = "viseme-map")]
    pub viseme_map: Option<PathBuf>,
    /// Replace the manifest's dictionary.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Garbage-merge threshold override.
    #[arg(long)]
    pub threshold: Option<u64>,
}

pub fn run(args: RunArgs) -> Result<()> {
    let out = crate::resolve_out(args.out);
    let config = super::train::load_config(&args.config, args.seed, args.threshold)?;
    let mut corpus = Corpus::read(&args.manifest)?;
    if let Some(path) = &args.viseme_map {
        corpus.map = VisemeMap::read(path)?;
    }
    if let Some(path) = &args.dict {
        let inventory = Inventory::of_map(&corpus.map);
        corpus.dict = PronunciationDict::read(path, &inventory)?;
    }
    let n_lines = corpus.n_lines();
    let test_size = args
        .test_size
        .unwrap_or_else(|| ((n_lines * 42 + 54) / 108).max(1));

    print_resolved(&[
        ("manifest", args.manifest.display().to_string()),
        ("out", out.display().to_string()),
        ("jobs", args.jobs.to_string()),
        ("folds", args.folds.to_string()),
        ("test_size", test_size.to_string()),
        ("lines", n_lines.to_string()),
    ]);
    print!("{}", config.to_text());

    let folds = make_folds(n_lines, test_size, args.folds, config.seed)?;
    textio::write_file(&out.join("resolved.cfg"), &config.to_text())?;
    folds.write(&out.join("folds.txt"))?;

    let results = run_folds_parallel(&config, &corpus, &folds, args.jobs.max(1));

    let mut accuracies = Vec::new();
    let mut summary = String::from("fold,n,h,d,s,i,correctness,accuracy\n");
    let mut first_error: Option<Error> = None;
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(outcome) => {
                write_fold(&out.join(format!("fold_{i:02}")), &outcome)?;
                let s = &outcome.score;
                summary.push_str(&format!(
                    "{i},{},{},{},{},{},{:.4},{:.4}\n",
                    s.n, s.h, s.d, s.s, s.i, s.correctness, s.accuracy
                ));
                accuracies.push(s.accuracy);
            }
            Err(e) => {
                eprintln!("fold {i} failed: {e}");
                summary.push_str(&format!("{i},failed,,,,,,\n"));
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if accuracies.len() >= 2 {
        let stats = fold_stats(&accuracies)?;
        summary.push_str(&format!(
            "mean,,,,,,,{:.4}\nse,,,,,,,{:.4}\n",
            stats.mean, stats.standard_error
        ));
    }
    textio::write_file(&out.join("summary.csv"), &summary)?;
    println!("run: outputs in {}", out.display());
    print!("{summary}");
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Run folds on a small worker pool; results land in fold order so output
/// is identical for any job count.
fn run_folds_parallel(
    config: &RecipeConfig,
    corpus: &Corpus,
    folds: &FoldSpec,
    jobs: usize,
) -> Vec<Result<FoldOutcome>> {
    let n = folds.folds.len();
    if jobs <= 1 || n <= 1 {
        return viserec::corpus::run_recipe(config, corpus, folds);
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<FoldOutcome>>>> =
        Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let result = run_fold(config, corpus, &folds.folds[i], i);
                results.lock().expect("no poisoned lock")[i] = Some(result);
            });
        }
    });
    results
        .into_inner()
        .expect("no poisoned lock")
        .into_iter()
        .map(|r| r.expect("every fold ran"))
        .collect()
}

fn write_fold(dir: &Path, outcome: &FoldOutcome) -> Result<()> {
    outcome.merged_map.write(&dir.join("merged.map"))?;
    outcome.models.write(&dir.join("models.mmf"))?;
    outcome.network.write(&dir.join("network.net"))?;
    outcome.score.write(&dir.join("score.txt"))?;
    outcome.confusion.write(&dir.join("confusion.csv"))?;
    textio::write_file(&dir.join("trace.txt"), &(outcome.trace.join("\n") + "\n"))?;
    let warn_text = if outcome.warnings.is_empty() {
        String::new()
    } else {
        outcome.warnings.join("\n") + "\n"
    };
    textio::write_file(&dir.join("warnings.txt"), &warn_text)?;

    let mut words = String::new();
    let mut lines = String::new();
    let transcripts: Vec<_> = outcome
        .hypotheses
        .iter()
        .map(|(line, decoded)| {
            words.push_str(&decoded.words.join(" "));
            words.push('\n');
            lines.push_str(&format!("{line}\n"));
            decoded.transcript.clone()
        })
        .collect();
    textio::write_file(&dir.join("hyp.lab"), &write_label_file(&transcripts))?;
    textio::write_file(&dir.join("hyp_words.txt"), &words)?;
    textio::write_file(&dir.join("test_lines.txt"), &lines)?;

    let mut lls = String::new();
    for (b, block) in outcome.reestimation_blocks.iter().enumerate() {
        for (it, ll) in block.iter().enumerate() {
            lls.push_str(&format!("block {b} iteration {it} {}\n", textio::fmt_f64(*ll)));
        }
    }
    textio::write_file(&dir.join("loglik.txt"), &lls)
}
