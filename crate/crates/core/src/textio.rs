//! Small helpers for the toolkit's line-oriented text formats.

use crate::error::{Error, Result};
use std::path::Path;

/// Format a float with 17 significant digits, enough for a lossless
/// f64 round-trip through text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parse a float, reporting the file and line on failure.
pub fn parse_f64(s: &str, path: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("expected a number, got '{s}'"),
    })
}

/// Parse an unsigned integer, reporting the file and line on failure.
pub fn parse_usize(s: &str, path: &str, line: usize) -> Result<usize> {
    s.parse::<usize>().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("expected an integer, got '{s}'"),
    })
}

/// Read a whole file, tagging I/O errors with the path.
pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write a whole file, tagging I/O errors with the path.
pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Iterate non-comment, non-blank lines with their 1-based numbers.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip_is_lossless() {
        for &x in &[0.0, 1.0, -1.5, 0.1, 1e-300, 123456.789e12, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
        }
    }

    #[test]
    fn content_lines_skip_comments_and_blanks() {
        let text = "# header\n\n a b \n# more\nc\n";
        let got: Vec<_> = content_lines(text).collect();
        assert_eq!(got, vec![(3, "a b"), (5, "c")]);
    }
}
