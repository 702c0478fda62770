//! `viserec train`: run the training recipe over a whole corpus.

use super::print_resolved;
use clap::Args;
use std::path::PathBuf;
use viserec::corpus::{train_models, Corpus, RecipeConfig};
use viserec::textio;
use viserec::Result;

#[derive(Args)]
pub struct TrainArgs {
    /// Corpus manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Recipe config file (`key = value`); defaults apply otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Garbage-merge threshold override.
    #[arg(long)]
    pub threshold: Option<u64>,
}

pub fn load_config(
    path: &Option<PathBuf>,
    seed: Option<u64>,
    threshold: Option<u64>,
) -> Result<RecipeConfig> {
    let mut config = match path {
        Some(p) => RecipeConfig::read(p)?,
        None => RecipeConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(threshold) = threshold {
        config.threshold = threshold;
    }
    Ok(config)
}

pub fn run(args: TrainArgs) -> Result<()> {
    let out = crate::resolve_out(args.out);
    let config = load_config(&args.config, args.seed, args.threshold)?;
    print_resolved(&[
        ("manifest", args.manifest.display().to_string()),
        ("out", out.display().to_string()),
    ]);
    print!("{}", config.to_text());

    let corpus = Corpus::read(&args.manifest)?;
    let all_lines: Vec<usize> = (0..corpus.n_lines()).collect();
    let trained = train_models(&config, &corpus, &all_lines)?;

    trained.merged_map.write(&out.join("merged.map"))?;
    trained.models.write(&out.join("models.mmf"))?;
    trained.network.write(&out.join("network.net"))?;
    textio::write_file(&out.join("trace.txt"), &(trained.trace.join("\n") + "\n"))?;
    let warn_text = if trained.warnings.is_empty() {
        String::new()
    } else {
        trained.warnings.join("\n") + "\n"
    };
    textio::write_file(&out.join("warnings.txt"), &warn_text)?;
    for w in &trained.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "train: {} models over {} lines, outputs in {}",
        trained.models.labels().count(),
        corpus.n_lines(),
        out.display()
    );
    Ok(())
}
