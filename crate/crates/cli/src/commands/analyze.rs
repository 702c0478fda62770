//! `viserec analyze`: per-viseme probabilities, rankings, decline curves,
//! cross-system rank correlations and fold statistics.
//!
//! Each positional argument names a system as `name=dir`, where `dir` is a
//! run output directory holding `fold_*/confusion.csv` and
//! `fold_*/score.txt`.

use super::print_resolved;
use clap::Args;
use std::path::{Path, PathBuf};
use viserec::analysis::{
    decline_curve, fold_stats, rank_visemes, spearman, viseme_probabilities,
    write_correlations_csv, write_decline_csv, write_decline_dat, write_fold_stats_csv,
    write_fold_stats_table, write_ranking_csv, CorrelationResult, ProbMode, VisemeProbability,
    DEFAULT_TIE_EPSILON,
};
use viserec::scoring::{ConfusionMatrix, ScoreReport};
use viserec::textio;
use viserec::{Error, Result};

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Systems to analyze, each as `name=run-directory`.
    #[arg(required = true)]
    pub systems: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Decline curve length.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Pool fold confusion matrices instead of averaging per-fold
    /// probabilities.
    #[arg(long)]
    pub pooled: bool,
    /// Probability difference grouped as a tie in rankings.
    #[arg(long = "tie-epsilon", default_value_t = DEFAULT_TIE_EPSILON)]
    pub tie_epsilon: f64,
}

struct System {
    name: String,
    confusions: Vec<ConfusionMatrix>,
    accuracies: Vec<f64>,
}

fn load_system(name: &str, dir: &Path) -> Result<System> {
    let mut confusions = Vec::new();
    let mut accuracies = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("fold_"))
        })
        .collect();
    entries.sort();
    for fold_dir in &entries {
        confusions.push(ConfusionMatrix::read(&fold_dir.join("confusion.csv"))?);
        accuracies.push(ScoreReport::read(&fold_dir.join("score.txt"))?.accuracy);
    }
    if confusions.is_empty() {
        // A bare directory with a single confusion matrix also works.
        confusions.push(ConfusionMatrix::read(&dir.join("confusion.csv"))?);
        if let Ok(report) = ScoreReport::read(&dir.join("score.txt")) {
            accuracies.push(report.accuracy);
        }
    }
    Ok(System {
        name: name.to_string(),
        confusions,
        accuracies,
    })
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    let out = crate::resolve_out(args.out);
    print_resolved(&[
        ("systems", args.systems.join(" ")),
        ("out", out.display().to_string()),
        ("top", args.top.to_string()),
        ("mode", if args.pooled { "pooled" } else { "per-fold" }.to_string()),
        ("tie_epsilon", args.tie_epsilon.to_string()),
    ]);
    let mode = if args.pooled {
        ProbMode::Pooled
    } else {
        ProbMode::PerFoldMean
    };

    let mut systems = Vec::new();
    for spec in &args.systems {
        let (name, dir) = spec.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("expected name=dir, got '{spec}'"))
        })?;
        systems.push(load_system(name, Path::new(dir))?);
    }

    let mut summary = String::new();
    let mut all_probs: Vec<(String, Vec<VisemeProbability>)> = Vec::new();
    let mut fold_rows = Vec::new();
    for system in &systems {
        let probs = viseme_probabilities(&system.confusions, mode)?;
        let ranking = rank_visemes(&probs, args.tie_epsilon);
        let curve = decline_curve(&probs, args.top);
        textio::write_file(
            &out.join(format!("ranking_{}.csv", system.name)),
            &write_ranking_csv(&ranking),
        )?;
        textio::write_file(
            &out.join(format!("decline_{}.csv", system.name)),
            &write_decline_csv(&curve),
        )?;
        textio::write_file(
            &out.join(format!("decline_{}.dat", system.name)),
            &write_decline_dat(&curve),
        )?;
        summary.push_str(&format!("system {}\n", system.name));
        summary.push_str(&format!(
            "  ranking: {}\n",
            ranking
                .groups
                .iter()
                .map(|g| {
                    if g.members.len() == 1 {
                        g.members[0].clone()
                    } else {
                        format!("{{{}}}", g.members.join(" "))
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        ))
        ;
        if !ranking.undefined.is_empty() {
            summary.push_str(&format!(
                "  undefined (never hypothesized): {}\n",
                ranking.undefined.join(" ")
            ));
        }
        if system.accuracies.len() >= 2 {
            let stats = fold_stats(&system.accuracies)?;
            summary.push_str(&format!(
                "  accuracy: mean {:.4} se {:.4} over {} folds\n",
                stats.mean, stats.standard_error, stats.n_folds
            ));
            fold_rows.push((system.name.clone(), stats));
        }
        all_probs.push((system.name.clone(), probs));
    }

    if !fold_rows.is_empty() {
        textio::write_file(&out.join("foldstats.csv"), &write_fold_stats_csv(&fold_rows))?;
        textio::write_file(
            &out.join("foldstats.txt"),
            &write_fold_stats_table(&fold_rows),
        )?;
    }

    // Pairwise rank correlations over visemes defined in both systems.
    let mut correlations: Vec<(String, String, CorrelationResult)> = Vec::new();
    for i in 0..all_probs.len() {
        for j in i + 1..all_probs.len() {
            let (na, pa) = &all_probs[i];
            let (nb, pb) = &all_probs[j];
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for vp in pa {
                if let Some(p) = vp.p {
                    if let Some(other) = pb.iter().find(|o| o.viseme == vp.viseme) {
                        if let Some(q) = other.p {
                            xs.push(p);
                            ys.push(q);
                        }
                    }
                }
            }
            match spearman(&xs, &ys) {
                Ok(result) => {
                    let marker = if result.p_value < 0.05 {
                        " (significant at 5%)"
                    } else {
                        ""
                    };
                    summary.push_str(&format!(
                        "correlation {na} vs {nb}: r {:.4} p {:.4e} n {}{marker}\n",
                        result.r, result.p_value, result.n
                    ));
                    correlations.push((na.clone(), nb.clone(), result));
                }
                Err(e) => {
                    summary.push_str(&format!("correlation {na} vs {nb}: undefined ({e})\n"));
                }
            }
        }
    }
    if !correlations.is_empty() {
        textio::write_file(
            &out.join("correlations.csv"),
            &write_correlations_csv(&correlations),
        )?;
    }
    textio::write_file(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}
