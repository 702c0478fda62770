//! Label transcripts with optional frame timing.

use crate::error::{Error, Result};
use crate::textio;
use std::path::Path;

/// One transcript unit. Frame spans are half-open `[start, end)`. The
/// `word_start` flag marks units that begin a word; it is an in-memory
/// annotation used when building alignment lattices and is not serialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub label: String,
    pub start: Option<usize>,
    pub end: Option<usize>,
    pub word_start: bool,
}

/// A sequence of labelled units, optionally timed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub units: Vec<Unit>,
}

impl Transcript {
    pub fn from_labels(labels: &[&str]) -> Transcript {
        Transcript {
            units: labels
                .iter()
                .map(|&l| Unit {
                    label: l.to_string(),
                    start: None,
                    end: None,
                    word_start: false,
                })
                .collect(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.units.iter().map(|u| u.label.clone()).collect()
    }

    /// Validate timing: starts not after ends, timed units ordered and
    /// non-overlapping.
    pub fn validate_timing(&self) -> Result<()> {
        let mut last_end: Option<usize> = None;
        for u in &self.units {
            match (u.start, u.end) {
                (Some(s), Some(e)) => {
                    if s > e {
                        return Err(Error::InvalidParameter(format!(
                            "unit '{}' has start {s} after end {e}",
                            u.label
                        )));
                    }
                    if let Some(prev) = last_end {
                        if s < prev {
                            return Err(Error::InvalidParameter(format!(
                                "unit '{}' overlaps the previous unit",
                                u.label
                            )));
                        }
                    }
                    last_end = Some(e);
                }
                (None, None) => {}
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "unit '{}' has partial timing",
                        u.label
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Parse a label file: one unit per line as `start end label` (frame
/// indices) or a bare `label`, utterances separated by blank lines.
pub fn parse_label_file(text: &str, path: &str) -> Result<Vec<Transcript>> {
    let mut out = Vec::new();
    let mut current = Transcript::default();
    let mut in_utt = false;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            if in_utt {
                out.push(std::mem::take(&mut current));
                in_utt = false;
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        in_utt = true;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let unit = match fields.len() {
            1 => Unit {
                label: fields[0].to_string(),
                start: None,
                end: None,
                word_start: false,
            },
            3 => Unit {
                label: fields[2].to_string(),
                start: Some(textio::parse_usize(fields[0], path, lineno)?),
                end: Some(textio::parse_usize(fields[1], path, lineno)?),
                word_start: false,
            },
            n => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("expected 'label' or 'start end label', got {n} fields"),
                })
            }
        };
        current.units.push(unit);
    }
    if in_utt {
        out.push(current);
    }
    for t in &out {
        t.validate_timing()?;
    }
    Ok(out)
}

/// Serialize transcripts in the label file format, blank-line separated.
pub fn write_label_file(transcripts: &[Transcript]) -> String {
    let mut out = String::new();
    for (i, t) in transcripts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for u in &t.units {
            match (u.start, u.end) {
                (Some(s), Some(e)) => out.push_str(&format!("{s} {e} {}\n", u.label)),
                _ => out.push_str(&format!("{}\n", u.label)),
            }
        }
    }
    out
}

/// Read a label file from disk.
pub fn read_label_file(path: &Path) -> Result<Vec<Transcript>> {
    parse_label_file(&textio::read_file(path)?, &path.display().to_string())
}
