//! Text file formats and sweep exports.
//!
//! All formats are line oriented, `#` starts a comment, numbers are plain
//! decimal or scientific notation. Model, matrix, transform, out-of-band and
//! zero-set files round-trip exactly; sweep exports print 15 significant
//! digits.

pub mod export;
pub mod matrix_file;
pub mod model_file;
pub mod oob_file;
pub mod transform_file;
pub mod zeros_file;

use std::path::Path;

use crate::error::{Error, Result};

/// Read a file with the path recorded in the error.
pub(crate) fn read_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

/// Write a file with the path recorded in the error.
pub(crate) fn write_file(path: impl AsRef<Path>, text: String) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

/// Iterator over (1-based line number, content) with comments and blank
/// lines stripped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn parse_f64(line: usize, token: &str, field: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("bad {field} value `{token}`")))
}

pub(crate) fn parse_usize(line: usize, token: &str, field: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| parse_err(line, format!("bad {field} value `{token}`")))
}
