//! Series and date files: UTF-8 text, one number per line.
//!
//! Series files may start with a single header line beginning with `#`.
//! Blank lines are not allowed. Line numbers in errors are 1-based.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nnquant_core::types::validate_series;
use nnquant_core::Series;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: line {line}: cannot parse {text:?}")]
    Parse { path: PathBuf, line: usize, text: String },
    #[error("{path}: line {line}: dates must be strictly increasing")]
    NotIncreasing { path: PathBuf, line: usize },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        source: nnquant_core::Error,
    },
}

impl IoError {
    /// The 1-based line number of a parse error, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            IoError::Parse { line, .. } | IoError::NotIncreasing { line, .. } => Some(*line),
            _ => None,
        }
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            IoError::FileNotFound(path.to_path_buf())
        } else {
            IoError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

/// Parses series text. A `#` header is allowed on the first line only.
pub fn parse_series(text: &str, path: &Path) -> Result<Series, IoError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if i == 0 && trimmed.starts_with('#') {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|_| IoError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            text: trimmed.to_string(),
        })?;
        values.push(value);
    }
    validate_series(&values).map_err(|source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_series_file(path: impl AsRef<Path>) -> Result<Series, IoError> {
    let path = path.as_ref();
    parse_series(&read(path)?, path)
}

pub fn parse_dates(text: &str, path: &Path) -> Result<Vec<usize>, IoError> {
    let mut dates: Vec<usize> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        let m: usize = trimmed
            .parse()
            .ok()
            .filter(|&m| m >= 1)
            .ok_or_else(|| IoError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                text: trimmed.to_string(),
            })?;
        if dates.last().is_some_and(|&prev| m <= prev) {
            return Err(IoError::NotIncreasing {
                path: path.to_path_buf(),
                line: i + 1,
            });
        }
        dates.push(m);
    }
    Ok(dates)
}

pub fn load_dates_file(path: impl AsRef<Path>) -> Result<Vec<usize>, IoError> {
    let path = path.as_ref();
    parse_dates(&read(path)?, path)
}

/// Series text with an optional header; values use the shortest decimal
/// form that parses back to the same `f64`.
pub fn format_series(values: &[f64], header: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        let _ = writeln!(out, "# {h}");
    }
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn write_series_file(path: impl AsRef<Path>, values: &[f64], header: Option<&str>) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, format_series(values, header)).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn series_examples() {
        assert_eq!(parse_series("1.0\n2.5\n", p()).unwrap().values(), &[1.0, 2.5]);
        assert_eq!(parse_series("# volume\n3\n", p()).unwrap().values(), &[3.0]);
        let err = parse_series("1.0\nabc\n", p()).unwrap_err();
        assert_eq!(err.line(), Some(2));
        assert!(matches!(parse_series("", p()), Err(IoError::Invalid { .. })));
        assert!(matches!(parse_series("1\nNaN\n", p()), Err(IoError::Invalid { .. })));
        // header only allowed first
        assert!(parse_series("1\n# x\n", p()).is_err());
    }

    #[test]
    fn dates_examples() {
        assert_eq!(parse_dates("10\n20\n", p()).unwrap(), vec![10, 20]);
        assert!(matches!(
            parse_dates("20\n10\n", p()),
            Err(IoError::NotIncreasing { line: 2, .. })
        ));
        assert!(matches!(
            parse_dates("10\n10\n", p()),
            Err(IoError::NotIncreasing { line: 2, .. })
        ));
        assert!(parse_dates("0\n", p()).is_err());
        assert!(parse_dates("1.5\n", p()).is_err());
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_series_file("/definitely/not/here.txt"),
            Err(IoError::FileNotFound(_))
        ));
    }

    #[test]
    fn shortest_round_trip() {
        let values = [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123, f64::MAX];
        let text = format_series(&values, Some("synth"));
        let back = parse_series(&text, p()).unwrap();
        for (a, b) in values.iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
