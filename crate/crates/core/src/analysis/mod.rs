//! Per-viseme recognition analysis: inverse recognition probabilities,
//! performance rankings with ties, decline curves, Spearman rank
//! correlation and cross-fold statistics.

mod report;

pub use report::{
    parse_correlations_csv, parse_decline_csv, parse_fold_stats_csv, parse_ranking_csv,
    write_correlations_csv, write_decline_csv, write_decline_dat, write_fold_stats_csv,
    write_fold_stats_table, write_ranking_csv,
};

use crate::error::{Error, Result};
use crate::scoring::ConfusionMatrix;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Probability tolerance when grouping near-equal visemes as ties.
pub const DEFAULT_TIE_EPSILON: f64 = 0.005;

/// The probability that the reference class was `viseme` given that the
/// recognizer output it: the column-normalized diagonal entry. `None` when
/// the recognizer never hypothesized the class.
pub fn inverse_recognition_prob(cm: &ConfusionMatrix, viseme: &str) -> Result<Option<f64>> {
    if !cm.labels().iter().any(|l| l == viseme) {
        return Err(Error::UnknownLabel(viseme.to_string()));
    }
    let total = cm.column_total(viseme);
    if total == 0 {
        return Ok(None);
    }
    Ok(Some(cm.get(viseme, viseme) as f64 / total as f64))
}

/// How per-fold confusion matrices combine into per-viseme probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbMode {
    /// Compute the probability on each fold, then average over the folds
    /// where the column is non-empty. The mode behind per-viseme error bars.
    PerFoldMean,
    /// Pool the folds into one matrix first.
    Pooled,
}

/// A per-viseme recognition probability with its cross-fold standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct VisemeProbability {
    pub viseme: String,
    /// Mean probability; `None` when no fold ever hypothesized the class.
    pub p: Option<f64>,
    /// Standard error over folds (zero for fewer than two defined folds).
    pub se: f64,
    /// Folds where the probability was defined.
    pub n_folds: usize,
}

/// Per-viseme recognition probabilities over cross-validation folds. All
/// matrices must share one label list.
pub fn viseme_probabilities(
    folds: &[ConfusionMatrix],
    mode: ProbMode,
) -> Result<Vec<VisemeProbability>> {
    let first = folds
        .first()
        .ok_or_else(|| Error::EmptyData("no confusion matrices".to_string()))?;
    let labels = first.labels().to_vec();
    for cm in folds {
        if cm.labels() != labels {
            return Err(Error::InvalidParameter(
                "confusion matrices have different label lists".to_string(),
            ));
        }
    }
    let mut out = Vec::with_capacity(labels.len());
    match mode {
        ProbMode::PerFoldMean => {
            for label in &labels {
                let values: Vec<f64> = folds
                    .iter()
                    .filter_map(|cm| inverse_recognition_prob(cm, label).transpose())
                    .collect::<Result<_>>()?;
                if values.is_empty() {
                    out.push(VisemeProbability {
                        viseme: label.clone(),
                        p: None,
                        se: 0.0,
                        n_folds: 0,
                    });
                } else {
                    let mean = values.iter().sum::<f64>() / values.len() as f64;
                    let se = if values.len() >= 2 {
                        standard_error(&values)
                    } else {
                        0.0
                    };
                    out.push(VisemeProbability {
                        viseme: label.clone(),
                        p: Some(mean),
                        se,
                        n_folds: values.len(),
                    });
                }
            }
        }
        ProbMode::Pooled => {
            let mut pooled = folds[0].clone();
            for cm in &folds[1..] {
                pooled.merge(cm)?;
            }
            for label in &labels {
                let p = inverse_recognition_prob(&pooled, label)?;
                out.push(VisemeProbability {
                    viseme: label.clone(),
                    p,
                    se: 0.0,
                    n_folds: if p.is_some() { folds.len() } else { 0 },
                });
            }
        }
    }
    Ok(out)
}

/// A tied group in a performance ranking: members share one fractional rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankGroup {
    /// Members in input order.
    pub members: Vec<String>,
    /// Mean of the 1-based positions the group spans.
    pub rank: f64,
    /// Probability of the group leader (the largest in the group).
    pub p: f64,
}

/// A best-first viseme ranking. Visemes whose probability was undefined are
/// listed last, flagged, and excluded from rank positions and correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    pub groups: Vec<RankGroup>,
    pub undefined: Vec<String>,
}

impl RankingResult {
    /// Flat `(viseme, fractional rank)` pairs over defined visemes.
    pub fn ranks(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for g in &self.groups {
            for m in &g.members {
                out.push((m.clone(), g.rank));
            }
        }
        out
    }
}

/// Rank visemes by probability, best first. Values within `tie_epsilon` of
/// a group's leader join that group; tied groups share the mean of the
/// positions they span.
pub fn rank_visemes(probs: &[VisemeProbability], tie_epsilon: f64) -> RankingResult {
    let mut defined: Vec<(&str, f64)> = probs
        .iter()
        .filter_map(|vp| vp.p.map(|p| (vp.viseme.as_str(), p)))
        .collect();
    let undefined: Vec<String> = probs
        .iter()
        .filter(|vp| vp.p.is_none())
        .map(|vp| vp.viseme.clone())
        .collect();
    defined.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("probabilities are finite")
            .then_with(|| a.0.cmp(b.0))
    });

    let mut groups = Vec::new();
    let mut i = 0;
    while i < defined.len() {
        let leader = defined[i].1;
        let mut j = i + 1;
        while j < defined.len() && leader - defined[j].1 <= tie_epsilon {
            j += 1;
        }
        // Positions i+1 ..= j (1-based) average to (i + j + 1) / 2.
        let rank = (i + j + 1) as f64 / 2.0;
        groups.push(RankGroup {
            members: defined[i..j].iter().map(|(v, _)| v.to_string()).collect(),
            rank,
            p: leader,
        });
        i = j;
    }
    RankingResult { groups, undefined }
}

/// How a Spearman p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    /// Exhaustive permutation distribution (n <= 10).
    Permutation,
    /// Student-t approximation with n - 2 degrees of freedom.
    TApproximation,
}

/// A Spearman rank correlation with its two-tailed p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: PValueMethod,
}

/// Fractional ranks of `values`, descending (rank 1 = largest). Ties share
/// the mean of the positions they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da == 0.0 || db == 0.0 {
        None
    } else {
        Some(num / (da * db).sqrt())
    }
}

/// Tie-corrected Spearman rank correlation between two score vectors over
/// the same items: the Pearson correlation of fractional ranks.
///
/// Two-tailed p-value: exhaustive permutation for n <= 10, otherwise the
/// t-approximation `t = r sqrt((n-2)/(1-r^2))` with n - 2 degrees of
/// freedom.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<CorrelationResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "spearman needs at least 3 items, got {n}"
        )));
    }
    let ra = fractional_ranks(a);
    let rb = fractional_ranks(b);
    let r = pearson(&ra, &rb).ok_or(Error::UndefinedCorrelation)?;

    let (p_value, method) = if n <= 10 {
        (permutation_p_value(&ra, &rb, r), PValueMethod::Permutation)
    } else {
        (t_approximation_p_value(r, n), PValueMethod::TApproximation)
    };
    Ok(CorrelationResult {
        r,
        p_value,
        n,
        method,
    })
}

/// Two-tailed p-value for the null of zero rank correlation under the
/// Student-t approximation `t = r sqrt((n-2)/(1-r^2))` with `n - 2`
/// degrees of freedom.
pub fn t_approximation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let r2 = (1.0 - r * r).max(f64::MIN_POSITIVE);
    let t = r * (df / r2).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Exact two-tailed permutation p-value: the fraction of permutations of
/// one rank vector whose |r| reaches |r_observed|, with a 1e-9 slack
/// absorbing floating-point noise at the boundary.
fn permutation_p_value(ra: &[f64], rb: &[f64], r_obs: f64) -> f64 {
    let n = ra.len();
    let mut perm: Vec<f64> = ra.to_vec();
    let mut count = 0u64;
    let mut total = 0u64;
    let threshold = r_obs.abs() - 1e-9;
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; n];
    let mut check = |p: &[f64]| {
        total += 1;
        if let Some(r) = pearson(p, rb) {
            if r.abs() >= threshold {
                count += 1;
            }
        }
    };
    check(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            check(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    count as f64 / total as f64
}

/// Mean and standard error of a per-fold statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldStatistics {
    pub mean: f64,
    /// Sample (n-1) standard deviation over folds divided by sqrt(n).
    pub standard_error: f64,
    pub n_folds: usize,
}

/// Cross-fold mean and standard error. Needs at least two folds.
pub fn fold_stats(values: &[f64]) -> Result<FoldStatistics> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "fold statistics need at least 2 folds, got {}",
            values.len()
        )));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(FoldStatistics {
        mean,
        standard_error: standard_error(values),
        n_folds: values.len(),
    })
}

fn standard_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// One point of a decline curve: a viseme with its mean probability and
/// one standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclinePoint {
    pub viseme: String,
    pub mean: f64,
    pub se: f64,
}

/// The top-k visemes by mean probability, best first. Undefined
/// probabilities are skipped.
pub fn decline_curve(probs: &[VisemeProbability], k: usize) -> Vec<DeclinePoint> {
    let mut defined: Vec<&VisemeProbability> = probs.iter().filter(|vp| vp.p.is_some()).collect();
    defined.sort_by(|a, b| {
        b.p.unwrap()
            .partial_cmp(&a.p.unwrap())
            .expect("finite probabilities")
            .then_with(|| a.viseme.cmp(&b.viseme))
    });
    defined
        .into_iter()
        .take(k)
        .map(|vp| DeclinePoint {
            viseme: vp.viseme.clone(),
            mean: vp.p.unwrap(),
            se: vp.se,
        })
        .collect()
}

/// Mean first-difference of a decline curve; more negative means a steeper
/// drop across the top performers.
pub fn decline_slope(series: &[DeclinePoint]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let diffs: f64 = series
        .windows(2)
        .map(|w| w[1].mean - w[0].mean)
        .sum();
    diffs / (series.len() - 1) as f64
}
