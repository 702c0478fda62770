//! Analysis report files: ranking, decline curve, correlation and fold
//! statistic CSVs plus plot-ready `.dat` emitters.
//!
//! CSV floats use shortest round-trip formatting, so parsing a report back
//! reproduces the values exactly. The fold-stats table variant mirrors the
//! fixed-decimal mean/standard-error layout used in summaries.

use super::{
    CorrelationResult, DeclinePoint, FoldStatistics, PValueMethod, RankingResult, RankGroup,
};
use crate::error::{Error, Result};
use crate::textio;

pub fn write_ranking_csv(ranking: &RankingResult) -> String {
    let mut out = String::from("viseme,rank,probability,tied_group\n");
    for (gi, g) in ranking.groups.iter().enumerate() {
        for m in &g.members {
            out.push_str(&format!("{m},{},{},{}\n", g.rank, g.p, gi));
        }
    }
    for u in &ranking.undefined {
        out.push_str(&format!("{u},,undefined,\n"));
    }
    out
}

pub fn parse_ranking_csv(text: &str, path: &str) -> Result<RankingResult> {
    let mut groups: Vec<RankGroup> = Vec::new();
    let mut undefined = Vec::new();
    let mut last_group: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: "expected 4 fields".to_string(),
            });
        }
        if fields[2] == "undefined" {
            undefined.push(fields[0].to_string());
            continue;
        }
        let rank = textio::parse_f64(fields[1], path, lineno)?;
        let p = textio::parse_f64(fields[2], path, lineno)?;
        let group: usize = textio::parse_usize(fields[3], path, lineno)?;
        if last_group == Some(group) {
            groups
                .last_mut()
                .expect("group seen before")
                .members
                .push(fields[0].to_string());
        } else {
            groups.push(RankGroup {
                members: vec![fields[0].to_string()],
                rank,
                p,
            });
            last_group = Some(group);
        }
    }
    Ok(RankingResult { groups, undefined })
}

pub fn write_decline_csv(series: &[DeclinePoint]) -> String {
    let mut out = String::from("position,viseme,mean,se\n");
    for (i, p) in series.iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", i + 1, p.viseme, p.mean, p.se));
    }
    out
}

pub fn parse_decline_csv(text: &str, path: &str) -> Result<Vec<DeclinePoint>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: "expected 4 fields".to_string(),
            });
        }
        out.push(DeclinePoint {
            viseme: fields[1].to_string(),
            mean: textio::parse_f64(fields[2], path, lineno)?,
            se: textio::parse_f64(fields[3], path, lineno)?,
        });
    }
    Ok(out)
}

/// Plot-ready three-column data: position, mean, standard error.
pub fn write_decline_dat(series: &[DeclinePoint]) -> String {
    let mut out = String::new();
    for (i, p) in series.iter().enumerate() {
        out.push_str(&format!("{} {} {}\n", i + 1, p.mean, p.se));
    }
    out
}

pub fn write_correlations_csv(rows: &[(String, String, CorrelationResult)]) -> String {
    let mut out = String::from("a,b,r,p_value,n,method\n");
    for (a, b, c) in rows {
        let method = match c.method {
            PValueMethod::Permutation => "permutation",
            PValueMethod::TApproximation => "t-approximation",
        };
        out.push_str(&format!("{a},{b},{},{},{},{method}\n", c.r, c.p_value, c.n));
    }
    out
}

pub fn parse_correlations_csv(
    text: &str,
    path: &str,
) -> Result<Vec<(String, String, CorrelationResult)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: "expected 6 fields".to_string(),
            });
        }
        let method = match fields[5] {
            "permutation" => PValueMethod::Permutation,
            "t-approximation" => PValueMethod::TApproximation,
            other => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("unknown method '{other}'"),
                })
            }
        };
        out.push((
            fields[0].to_string(),
            fields[1].to_string(),
            CorrelationResult {
                r: textio::parse_f64(fields[2], path, lineno)?,
                p_value: textio::parse_f64(fields[3], path, lineno)?,
                n: textio::parse_usize(fields[4], path, lineno)?,
                method,
            },
        ));
    }
    Ok(out)
}

pub fn write_fold_stats_csv(rows: &[(String, FoldStatistics)]) -> String {
    let mut out = String::from("name,mean,standard_error,n_folds\n");
    for (name, s) in rows {
        out.push_str(&format!(
            "{name},{},{},{}\n",
            s.mean, s.standard_error, s.n_folds
        ));
    }
    out
}

pub fn parse_fold_stats_csv(text: &str, path: &str) -> Result<Vec<(String, FoldStatistics)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: "expected 4 fields".to_string(),
            });
        }
        out.push((
            fields[0].to_string(),
            FoldStatistics {
                mean: textio::parse_f64(fields[1], path, lineno)?,
                standard_error: textio::parse_f64(fields[2], path, lineno)?,
                n_folds: textio::parse_usize(fields[3], path, lineno)?,
            },
        ));
    }
    Ok(out)
}

/// Fixed-decimal mean/standard-error table, one `name mean se` row per
/// system.
pub fn write_fold_stats_table(rows: &[(String, FoldStatistics)]) -> String {
    let mut out = String::new();
    for (name, s) in rows {
        out.push_str(&format!("{name} {:.4} {:.4}\n", s.mean, s.standard_error));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{rank_visemes, VisemeProbability};

    fn vp(v: &str, p: Option<f64>) -> VisemeProbability {
        VisemeProbability {
            viseme: v.to_string(),
            p,
            se: 0.125,
            n_folds: 5,
        }
    }

    #[test]
    fn ranking_csv_round_trip() {
        let probs = vec![
            vp("v18", Some(0.951)),
            vp("v04", Some(0.82)),
            vp("v12", Some(0.82)),
            vp("v15", None),
        ];
        let ranking = rank_visemes(&probs, 0.005);
        let csv = write_ranking_csv(&ranking);
        let again = parse_ranking_csv(&csv, "mem").unwrap();
        assert_eq!(ranking, again);
    }

    #[test]
    fn decline_csv_round_trip() {
        let series = vec![
            DeclinePoint { viseme: "a".into(), mean: 0.9371, se: 0.021 },
            DeclinePoint { viseme: "b".into(), mean: 0.5, se: 0.0 },
        ];
        let csv = write_decline_csv(&series);
        let again = parse_decline_csv(&csv, "mem").unwrap();
        assert_eq!(series, again);
        let dat = write_decline_dat(&series);
        assert_eq!(dat.lines().count(), 2);
    }

    #[test]
    fn fold_stats_table_layout() {
        let rows = vec![(
            "T1 shape".to_string(),
            FoldStatistics {
                mean: 21.736,
                standard_error: 0.7501,
                n_folds: 5,
            },
        )];
        assert_eq!(write_fold_stats_table(&rows), "T1 shape 21.7360 0.7501\n");
        let csv = write_fold_stats_csv(&rows);
        let again = parse_fold_stats_csv(&csv, "mem").unwrap();
        assert_eq!(rows, again);
    }
}
