//! Line-oriented text format for weighted point sets.
//!
//! ```text
//! dim=2 count=3
//! 0.5 -1.25 1.0 0.0
//! ...
//! ```
//!
//! Each point line holds `d` coordinates followed by the real and imaginary
//! part of its weight. Floats are written in shortest round-trip form, so
//! reading back a written set reproduces it bit for bit.

use std::fmt::Write as _;

use diffract_core::{AveragingWindow, Complex64, WeightedPointSet};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("header announces {expected} points, found {found}")]
    Count { expected: usize, found: usize },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: diffract_core::Error },
}

pub fn write_pointset(ps: &WeightedPointSet) -> String {
    let mut out = String::with_capacity(32 * (ps.len() + 1));
    writeln!(out, "dim={} count={}", ps.dim(), ps.len()).unwrap();
    for (x, w) in ps.iter() {
        for xi in x {
            write!(out, "{xi:?} ").unwrap();
        }
        writeln!(out, "{:?} {:?}", w.re, w.im).unwrap();
    }
    out
}

fn header_field(token: Option<&str>, key: &str) -> Result<usize, String> {
    let token = token.ok_or_else(|| format!("missing `{key}=`"))?;
    let value = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| format!("expected `{key}=<n>`, found `{token}`"))?;
    value.parse().map_err(|_| format!("`{value}` is not a count"))
}

/// Parses the text format; every point must lie strictly inside `window`.
pub fn read_pointset(text: &str, window: AveragingWindow) -> Result<WeightedPointSet, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(FormatError::Syntax { line: 1, reason: "empty input".into() })?;
    let mut tokens = header.split_whitespace();
    let syntax = |line: usize, reason: String| FormatError::Syntax { line, reason };
    let dim = header_field(tokens.next(), "dim").map_err(|r| syntax(1, r))?;
    let count = header_field(tokens.next(), "count").map_err(|r| syntax(1, r))?;
    if dim != window.dim() {
        return Err(FormatError::Invalid {
            line: 1,
            source: diffract_core::Error::DimensionMismatch { expected: window.dim(), found: dim },
        });
    }
    let mut ps = WeightedPointSet::with_capacity(window, count);
    let mut values = Vec::with_capacity(dim + 2);
    for (i, line) in lines {
        let n = i + 1;
        values.clear();
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| syntax(n, format!("`{tok}` is not a number")))?);
        }
        if values.len() != dim + 2 {
            return Err(syntax(n, format!("expected {} numbers, found {}", dim + 2, values.len())));
        }
        let w = Complex64::new(values[dim], values[dim + 1]);
        ps.push(&values[..dim], w).map_err(|source| FormatError::Invalid { line: n, source })?;
    }
    if ps.len() != count {
        return Err(FormatError::Count { expected: count, found: ps.len() });
    }
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let w = AveragingWindow::cube(2, 10.0).unwrap();
        let pts = [
            ([0.1, -3.0], Complex64::new(1.0, 0.0)),
            ([1.0 / 3.0, 9.999_999_999_999_998], Complex64::new(-0.5, 1e-300)),
            ([-7.25e-12, 2.0_f64.sqrt()], Complex64::new(f64::MIN_POSITIVE, -1.0 / 7.0)),
        ];
        let ps = WeightedPointSet::from_points(w.clone(), pts.iter().map(|(x, c)| (&x[..], *c))).unwrap();
        let text = write_pointset(&ps);
        assert!(text.starts_with("dim=2 count=3\n"));
        assert_eq!(read_pointset(&text, w).unwrap(), ps);
    }

    #[test]
    fn empty_set() {
        let w = AveragingWindow::interval(1.0).unwrap();
        let ps = WeightedPointSet::new(w.clone());
        assert_eq!(read_pointset(&write_pointset(&ps), w).unwrap(), ps);
    }

    #[test]
    fn malformed_inputs() {
        let w = AveragingWindow::interval(5.0).unwrap();
        assert!(matches!(read_pointset("dim=1\n", w.clone()), Err(FormatError::Syntax { line: 1, .. })));
        assert!(matches!(read_pointset("dim=1 count=1\n1 2\n", w.clone()), Err(FormatError::Syntax { line: 2, .. })));
        assert!(matches!(read_pointset("dim=1 count=2\n1 1 0\n", w.clone()), Err(FormatError::Count { .. })));
        assert!(matches!(read_pointset("dim=1 count=1\n9 1 0\n", w.clone()), Err(FormatError::Invalid { line: 2, .. })));
        assert!(matches!(read_pointset("dim=1 count=1\nx 1 0\n", w), Err(FormatError::Syntax { line: 2, .. })));
    }
}
