//! Edit-distance alignment of label sequences, correctness/accuracy
//! scoring and confusion matrices.
//!
//! Alignment minimizes total cost under configurable substitution,
//! deletion and insertion penalties (defaults 10/7/7, matches free). Ties
//! prefer match, then substitution, then deletion, then insertion.

use crate::error::{Error, Result};
use crate::textio;
use std::collections::BTreeMap;
use std::path::Path;

/// Edit operation penalties. Matches cost zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EditCosts {
    pub substitution: u32,
    pub deletion: u32,
    pub insertion: u32,
}

impl Default for EditCosts {
    fn default() -> EditCosts {
        EditCosts {
            substitution: 10,
            deletion: 7,
            insertion: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Hit,
    Substitution,
    Deletion,
    Insertion,
}

/// One aligned step: the operation plus the labels it touched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignStep {
    pub op: EditOp,
    pub reference: Option<String>,
    pub hypothesis: Option<String>,
}

/// A minimum-cost alignment of a hypothesis against a reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub steps: Vec<AlignStep>,
    pub cost: u32,
}

impl Alignment {
    pub fn count(&self, op: EditOp) -> u64 {
        self.steps.iter().filter(|s| s.op == op).count() as u64
    }
}

/// Minimum-cost edit alignment between a reference and a hypothesis.
pub fn align_labels(reference: &[String], hypothesis: &[String], costs: &EditCosts) -> Alignment {
    let n = reference.len();
    let m = hypothesis.len();
    // choice: 0 = diagonal (hit/sub), 1 = deletion (up), 2 = insertion (left)
    let mut cost = vec![0u32; (n + 1) * (m + 1)];
    let mut choice = vec![0u8; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in 1..=n {
        cost[at(i, 0)] = cost[at(i - 1, 0)] + costs.deletion;
        choice[at(i, 0)] = 1;
    }
    for j in 1..=m {
        cost[at(0, j)] = cost[at(0, j - 1)] + costs.insertion;
        choice[at(0, j)] = 2;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag_cost = if reference[i - 1] == hypothesis[j - 1] {
                0
            } else {
                costs.substitution
            };
            // Preference order on ties: match/substitution, deletion,
            // insertion. Strict < keeps the earlier candidate.
            let mut best = cost[at(i - 1, j - 1)] + diag_cost;
            let mut pick = 0u8;
            let del = cost[at(i - 1, j)] + costs.deletion;
            if del < best {
                best = del;
                pick = 1;
            }
            let ins = cost[at(i, j - 1)] + costs.insertion;
            if ins < best {
                best = ins;
                pick = 2;
            }
            cost[at(i, j)] = best;
            choice[at(i, j)] = pick;
        }
    }

    let mut steps = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match choice[at(i, j)] {
            0 if i > 0 && j > 0 => {
                let op = if reference[i - 1] == hypothesis[j - 1] {
                    EditOp::Hit
                } else {
                    EditOp::Substitution
                };
                steps.push(AlignStep {
                    op,
                    reference: Some(reference[i - 1].clone()),
                    hypothesis: Some(hypothesis[j - 1].clone()),
                });
                i -= 1;
                j -= 1;
            }
            1 => {
                steps.push(AlignStep {
                    op: EditOp::Deletion,
                    reference: Some(reference[i - 1].clone()),
                    hypothesis: None,
                });
                i -= 1;
            }
            _ => {
                steps.push(AlignStep {
                    op: EditOp::Insertion,
                    reference: None,
                    hypothesis: Some(hypothesis[j - 1].clone()),
                });
                j -= 1;
            }
        }
    }
    steps.reverse();
    Alignment {
        steps,
        cost: cost[at(n, m)],
    }
}

/// Pooled recognition counts with correctness and accuracy percentages.
///
/// `n = h + d + s`; correctness is `100 h / n` and accuracy `100 (h - i) / n`
/// (negative when insertions outnumber hits).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub n: u64,
    pub h: u64,
    pub d: u64,
    pub s: u64,
    pub i: u64,
    pub correctness: f64,
    pub accuracy: f64,
}

/// Pool alignments into a score report. Errors if the pooled reference is
/// empty.
pub fn score(alignments: &[Alignment]) -> Result<ScoreReport> {
    let mut h = 0;
    let mut d = 0;
    let mut s = 0;
    let mut i = 0;
    for a in alignments {
        h += a.count(EditOp::Hit);
        d += a.count(EditOp::Deletion);
        s += a.count(EditOp::Substitution);
        i += a.count(EditOp::Insertion);
    }
    let n = h + d + s;
    if n == 0 {
        return Err(Error::UndefinedScore);
    }
    Ok(ScoreReport {
        n,
        h,
        d,
        s,
        i,
        correctness: 100.0 * h as f64 / n as f64,
        accuracy: 100.0 * (h as f64 - i as f64) / n as f64,
    })
}

impl ScoreReport {
    pub fn to_text(&self) -> String {
        format!(
            "N {}\nH {}\nD {}\nS {}\nI {}\ncorrectness {:.4}\naccuracy {:.4}\n",
            self.n, self.h, self.d, self.s, self.i, self.correctness, self.accuracy
        )
    }

    pub fn parse(text: &str, path: &str) -> Result<ScoreReport> {
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in textio::content_lines(text) {
            let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| {
                Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("expected 'key value', got '{line}'"),
                }
            })?;
            fields.insert(key.to_string(), value.trim().to_string());
        }
        let get = |k: &str| -> Result<String> {
            fields.get(k).cloned().ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: 0,
                msg: format!("missing '{k}'"),
            })
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?.parse().map_err(|_| Error::Parse {
                path: path.to_string(),
                line: 0,
                msg: format!("bad integer for '{k}'"),
            })
        };
        Ok(ScoreReport {
            n: int("N")?,
            h: int("H")?,
            d: int("D")?,
            s: int("S")?,
            i: int("I")?,
            correctness: textio::parse_f64(&get("correctness")?, path, 0)?,
            accuracy: textio::parse_f64(&get("accuracy")?, path, 0)?,
        })
    }

    pub fn read(path: &Path) -> Result<ScoreReport> {
        ScoreReport::parse(&textio::read_file(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }
}

/// A reference-by-hypothesis confusion matrix with deletion and insertion
/// margins, accumulated from alignment hit/substitution pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
    counts: Vec<u64>,
    del: Vec<u64>,
    ins: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(labels: &[String]) -> ConfusionMatrix {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        ConfusionMatrix {
            labels: labels.to_vec(),
            index,
            counts: vec![0; labels.len() * labels.len()],
            del: vec![0; labels.len()],
            ins: vec![0; labels.len()],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, reference: &str, hypothesis: &str) -> u64 {
        match (self.index.get(reference), self.index.get(hypothesis)) {
            (Some(&r), Some(&h)) => self.counts[r * self.labels.len() + h],
            _ => 0,
        }
    }

    pub fn deletions(&self, reference: &str) -> u64 {
        self.index.get(reference).map_or(0, |&r| self.del[r])
    }

    pub fn insertions(&self, hypothesis: &str) -> u64 {
        self.index.get(hypothesis).map_or(0, |&h| self.ins[h])
    }

    /// Total of the hypothesis column for a label.
    pub fn column_total(&self, hypothesis: &str) -> u64 {
        match self.index.get(hypothesis) {
            Some(&h) => (0..self.labels.len())
                .map(|r| self.counts[r * self.labels.len() + h])
                .sum(),
            None => 0,
        }
    }

    pub fn accumulate(&mut self, alignment: &Alignment) -> Result<()> {
        let idx = |label: &str| -> Result<usize> {
            self.index
                .get(label)
                .copied()
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))
        };
        for step in &alignment.steps {
            match step.op {
                EditOp::Hit | EditOp::Substitution => {
                    let r = idx(step.reference.as_ref().unwrap())?;
                    let h = idx(step.hypothesis.as_ref().unwrap())?;
                    self.counts[r * self.labels.len() + h] += 1;
                }
                EditOp::Deletion => {
                    let r = idx(step.reference.as_ref().unwrap())?;
                    self.del[r] += 1;
                }
                EditOp::Insertion => {
                    let h = idx(step.hypothesis.as_ref().unwrap())?;
                    self.ins[h] += 1;
                }
            }
        }
        Ok(())
    }

    /// Pool another matrix over the same label list into this one.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::InvalidParameter(
                "confusion matrices have different label lists".to_string(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.del.iter_mut().zip(&other.del) {
            *a += b;
        }
        for (a, b) in self.ins.iter_mut().zip(&other.ins) {
            *a += b;
        }
        Ok(())
    }

    /// CSV with a header row of hypothesis labels plus INS, one row per
    /// reference label plus a DEL column, and a final INS row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ref\\hyp");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push_str(",DEL\n");
        for (r, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for h in 0..self.labels.len() {
                out.push_str(&format!(",{}", self.counts[r * self.labels.len() + h]));
            }
            out.push_str(&format!(",{}\n", self.del[r]));
        }
        out.push_str("INS");
        for h in 0..self.labels.len() {
            out.push_str(&format!(",{}", self.ins[h]));
        }
        out.push_str(",0\n");
        out
    }

    pub fn parse_csv(text: &str, path: &str) -> Result<ConfusionMatrix> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (lineno, header) = lines.next().ok_or_else(|| Error::Parse {
            path: path.to_string(),
            line: 1,
            msg: "empty confusion CSV".to_string(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 || cols[0] != "ref\\hyp" || cols[cols.len() - 1] != "DEL" {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: "bad confusion CSV header".to_string(),
            });
        }
        let labels: Vec<String> = cols[1..cols.len() - 1].iter().map(|s| s.to_string()).collect();
        let mut cm = ConfusionMatrix::new(&labels);
        let mut rows_seen = 0;
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != labels.len() + 2 {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("expected {} fields", labels.len() + 2),
                });
            }
            let parse_u64 = |s: &str| -> Result<u64> {
                s.parse().map_err(|_| Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("bad count '{s}'"),
                })
            };
            if fields[0] == "INS" {
                for (h, tok) in fields[1..=labels.len()].iter().enumerate() {
                    cm.ins[h] = parse_u64(tok)?;
                }
            } else {
                let r = rows_seen;
                if r >= labels.len() || fields[0] != labels[r] {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("unexpected row label '{}'", fields[0]),
                    });
                }
                for (h, tok) in fields[1..=labels.len()].iter().enumerate() {
                    cm.counts[r * labels.len() + h] = parse_u64(tok)?;
                }
                cm.del[r] = parse_u64(fields[labels.len() + 1])?;
                rows_seen += 1;
            }
        }
        Ok(cm)
    }

    pub fn read(path: &Path) -> Result<ConfusionMatrix> {
        ConfusionMatrix::parse_csv(&textio::read_file(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_csv())
    }
}

/// Build a confusion matrix over a declared label list from alignments.
pub fn confusion(alignments: &[Alignment], labels: &[String]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(labels);
    for a in alignments {
        cm.accumulate(a)?;
    }
    Ok(cm)
}
