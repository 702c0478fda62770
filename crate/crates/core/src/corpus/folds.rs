//! Cross-validation fold construction.

use crate::error::{Error, Result};
use crate::textio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// One train/test split over corpus line indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test: Vec<usize>,
    pub train: Vec<usize>,
}

/// A seeded set of folds. Test lines are drawn independently per fold, so
/// folds may overlap; within a fold the test lines are distinct and the
/// training set is the complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    pub n_lines: usize,
    pub folds: Vec<Fold>,
    pub seed: u64,
}

/// Draw `n_folds` folds of `test_size` distinct test lines each, fully
/// determined by the seed.
pub fn make_folds(
    n_lines: usize,
    test_size: usize,
    n_folds: usize,
    seed: u64,
) -> Result<FoldSpec> {
    if test_size >= n_lines {
        return Err(Error::InvalidParameter(format!(
            "test size {test_size} must be smaller than the corpus ({n_lines} lines)"
        )));
    }
    if n_folds < 1 {
        return Err(Error::InvalidParameter("need at least one fold".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = Vec::with_capacity(n_folds);
    for _ in 0..n_folds {
        let mut test: Vec<usize> = rand::seq::index::sample(&mut rng, n_lines, test_size).into_vec();
        test.sort_unstable();
        let train: Vec<usize> = (0..n_lines).filter(|i| !test.contains(i)).collect();
        folds.push(Fold { test, train });
    }
    Ok(FoldSpec {
        n_lines,
        folds,
        seed,
    })
}

impl FoldSpec {
    /// Canonical text form: header plus one `test idx idx …` line per fold.
    pub fn to_text(&self) -> String {
        let mut out = format!("folds lines {} seed {}\n", self.n_lines, self.seed);
        for fold in &self.folds {
            let row: Vec<String> = fold.test.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("test {}\n", row.join(" ")));
        }
        out
    }

    pub fn parse(text: &str, path: &str) -> Result<FoldSpec> {
        let mut n_lines = None;
        let mut seed = None;
        let mut folds = Vec::new();
        for (lineno, line) in textio::content_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "folds" if fields.len() == 5 && fields[1] == "lines" && fields[3] == "seed" => {
                    n_lines = Some(textio::parse_usize(fields[2], path, lineno)?);
                    seed = Some(fields[4].parse::<u64>().map_err(|_| Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("bad seed '{}'", fields[4]),
                    })?);
                }
                "test" => {
                    let test: Vec<usize> = fields[1..]
                        .iter()
                        .map(|tok| textio::parse_usize(tok, path, lineno))
                        .collect::<Result<_>>()?;
                    folds.push(test);
                }
                other => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        let n_lines = n_lines.ok_or_else(|| Error::Parse {
            path: path.to_string(),
            line: 0,
            msg: "missing folds header".to_string(),
        })?;
        let folds = folds
            .into_iter()
            .map(|test| {
                let train = (0..n_lines).filter(|i| !test.contains(i)).collect();
                Fold { test, train }
            })
            .collect();
        Ok(FoldSpec {
            n_lines,
            folds,
            seed: seed.unwrap_or(0),
        })
    }

    pub fn read(path: &Path) -> Result<FoldSpec> {
        FoldSpec::parse(&textio::read_file(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }
}
