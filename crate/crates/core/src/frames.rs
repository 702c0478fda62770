//! Feature frame sets and their on-disk format.
//!
//! A frame file starts with a `#dim N rate R` header line followed by one
//! frame per line, space-separated numbers. The format is shared between the
//! linear feature models and the HMM trainer/decoder.

use crate::error::{Error, Result};
use crate::textio;
use std::path::Path;

/// A fixed-dimension sequence of observation frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    dim: usize,
    rate: f64,
    data: Vec<f64>,
}

impl FrameSet {
    pub fn new(dim: usize, rate: f64) -> FrameSet {
        FrameSet {
            dim,
            rate,
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Frames per second.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, frame: &[f64]) -> Result<()> {
        if frame.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: frame.len(),
            });
        }
        self.data.extend_from_slice(frame);
        Ok(())
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn parse(text: &str, path: &str) -> Result<FrameSet> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: 1,
                msg: "missing '#dim N rate R' header".to_string(),
            })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "#dim" || fields[2] != "rate" {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: format!("expected '#dim N rate R' header, got '{header}'"),
            });
        }
        let dim = textio::parse_usize(fields[1], path, lineno)?;
        let rate = textio::parse_f64(fields[3], path, lineno)?;
        let mut set = FrameSet::new(dim, rate);
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut frame = Vec::with_capacity(dim);
            for tok in line.split_whitespace() {
                frame.push(textio::parse_f64(tok, path, lineno)?);
            }
            if frame.len() != dim {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("frame has {} values, expected {dim}", frame.len()),
                });
            }
            set.data.extend_from_slice(&frame);
        }
        Ok(set)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#dim {} rate {}\n", self.dim, self.rate);
        for frame in self.iter() {
            let row: Vec<String> = frame.iter().map(|&v| textio::fmt_f64(v)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn read(path: &Path) -> Result<FrameSet> {
        FrameSet::parse(&textio::read_file(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }
}
