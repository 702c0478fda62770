//! Linear model file format.
//!
//! Text header (`dim`, `modes`, `retained_fraction`, `total_variance`,
//! optional `note`), then `mean <vector>`, `eigenvalues <vector>` and one
//! `mode <vector>` line per mode. Floats carry 17 significant digits.

use super::LinearModel;
use crate::error::{Error, Result};
use crate::textio;
use std::path::Path;

impl LinearModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dim {}\n", self.dim()));
        out.push_str(&format!("modes {}\n", self.mode_count()));
        out.push_str(&format!(
            "retained_fraction {}\n",
            textio::fmt_f64(self.retained_fraction)
        ));
        out.push_str(&format!(
            "total_variance {}\n",
            textio::fmt_f64(self.total_variance)
        ));
        if !self.domain_note.is_empty() {
            out.push_str(&format!("note {}\n", self.domain_note));
        }
        out.push_str(&format!("mean {}\n", join(&self.mean)));
        out.push_str(&format!("eigenvalues {}\n", join(&self.eigenvalues)));
        for mode in &self.modes {
            out.push_str(&format!("mode {}\n", join(mode)));
        }
        out
    }

    pub fn parse(text: &str, path: &str) -> Result<LinearModel> {
        let mut dim = None;
        let mut n_modes = None;
        let mut retained_fraction = None;
        let mut total_variance = None;
        let mut note = String::new();
        let mut mean = None;
        let mut eigenvalues = None;
        let mut modes = Vec::new();
        for (lineno, line) in textio::content_lines(text) {
            let (key, rest) = line.split_once(char::is_whitespace).ok_or_else(|| {
                Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("expected 'key value', got '{line}'"),
                }
            })?;
            let rest = rest.trim();
            match key {
                "dim" => dim = Some(textio::parse_usize(rest, path, lineno)?),
                "modes" => n_modes = Some(textio::parse_usize(rest, path, lineno)?),
                "retained_fraction" => {
                    retained_fraction = Some(textio::parse_f64(rest, path, lineno)?)
                }
                "total_variance" => total_variance = Some(textio::parse_f64(rest, path, lineno)?),
                "note" => note = rest.to_string(),
                "mean" => mean = Some(parse_vec(rest, path, lineno)?),
                "eigenvalues" => eigenvalues = Some(parse_vec(rest, path, lineno)?),
                "mode" => modes.push(parse_vec(rest, path, lineno)?),
                other => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        let missing = |what: &str| Error::Parse {
            path: path.to_string(),
            line: 0,
            msg: format!("missing '{what}'"),
        };
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let n_modes = n_modes.ok_or_else(|| missing("modes"))?;
        let mean = mean.ok_or_else(|| missing("mean"))?;
        let eigenvalues = eigenvalues.unwrap_or_default();
        let model = LinearModel {
            mean,
            modes,
            eigenvalues,
            total_variance: total_variance.ok_or_else(|| missing("total_variance"))?,
            retained_fraction: retained_fraction.ok_or_else(|| missing("retained_fraction"))?,
            domain_note: note,
        };
        if model.mean.len() != dim
            || model.modes.len() != n_modes
            || model.eigenvalues.len() != n_modes
            || model.modes.iter().any(|m| m.len() != dim)
        {
            return Err(Error::Parse {
                path: path.to_string(),
                line: 0,
                msg: "header does not match vector counts".to_string(),
            });
        }
        Ok(model)
    }

    pub fn read(path: &Path) -> Result<LinearModel> {
        LinearModel::parse(&textio::read_file(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|&x| textio::fmt_f64(x))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_vec(s: &str, path: &str, lineno: usize) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|tok| textio::parse_f64(tok, path, lineno))
        .collect()
}
