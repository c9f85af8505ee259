//! Text formats for patterns and partially observed matrices, and number
//! formatting for reports.
//!
//! Coordinate text: a header line `n1 n2`, then one `i j [value]` line per
//! observed entry with 1-based indices. Dense CSV: one row per matrix row,
//! with the token `NA` for unobserved cells. Lines starting with `#` and
//! blank lines are ignored in both.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::pattern::ObservationPattern;
use crate::solvers::ObservedMatrix;

/// Formats `x` with 9 significant digits, like C's `%.9g`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{x:.8e}");
        let (mant, e) = s.split_once('e').expect("exponent");
        format!("{}e{e}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {tok:?}"),
    })
}

/// Parses coordinate text. Returns the pattern and, when every entry line
/// carries a value, the observed matrix.
pub fn parse_coordinate(text: &str) -> Result<(ObservationPattern, Option<ObservedMatrix>)> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing 'n1 n2' header".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: hline,
            message: "header must be 'n1 n2'".into(),
        });
    }
    let n1: usize = parse_num(dims[0], hline)?;
    let n2: usize = parse_num(dims[1], hline)?;
    let mut entries = Vec::new();
    let mut values = Vec::new();
    let mut with_value = 0;
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&toks.len()) {
            return Err(Error::Parse {
                line: ln,
                message: "expected 'i j [value]'".into(),
            });
        }
        let i: usize = parse_num(toks[0], ln)?;
        let j: usize = parse_num(toks[1], ln)?;
        if i == 0 || j == 0 || i > n1 || j > n2 {
            return Err(Error::Parse {
                line: ln,
                message: format!("index ({i}, {j}) outside 1..={n1} x 1..={n2}"),
            });
        }
        entries.push((i - 1, j - 1));
        if let Some(v) = toks.get(2) {
            values.push(parse_num::<f64>(v, ln)?);
            with_value += 1;
        } else {
            values.push(f64::NAN);
        }
    }
    if with_value != 0 && with_value != entries.len() {
        return Err(Error::Parse {
            line: hline,
            message: "either every entry line or none must carry a value".into(),
        });
    }
    // Values follow the sorted pattern order.
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by_key(|&k| entries[k]);
    let pattern = ObservationPattern::new(n1, n2, entries.iter().copied())?;
    let observed = if with_value > 0 {
        Some(ObservedMatrix::new(pattern.clone(), order.iter().map(|&k| values[k]).collect())?)
    } else {
        None
    };
    Ok((pattern, observed))
}

/// Parses a dense CSV grid with `NA` for missing cells.
pub fn parse_dense_csv(text: &str) -> Result<ObservedMatrix> {
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (ln, line) in content_lines(text) {
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                if tok.eq_ignore_ascii_case("NA") {
                    Ok(None)
                } else {
                    parse_num::<f64>(tok, ln).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("row has {} cells, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    let n1 = rows.len();
    let n2 = rows.first().map_or(0, |r| r.len());
    let mut entries = Vec::new();
    let mut values = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if let Some(v) = cell {
                entries.push((i, j));
                values.push(*v);
            }
        }
    }
    ObservedMatrix::new(ObservationPattern::new(n1, n2, entries)?, values)
}

/// Reads either format, choosing dense CSV when the first content line
/// contains a comma.
pub fn parse_observed(text: &str) -> Result<ObservedMatrix> {
    let dense = content_lines(text).next().is_some_and(|(_, l)| l.contains(','));
    if dense {
        parse_dense_csv(text)
    } else {
        match parse_coordinate(text)? {
            (_, Some(m)) => Ok(m),
            (_, None) => Err(Error::Parse {
                line: 1,
                message: "entry lines carry no values".into(),
            }),
        }
    }
}

/// Reads a pattern from coordinate text (values ignored) or dense CSV.
pub fn parse_pattern(text: &str) -> Result<ObservationPattern> {
    let dense = content_lines(text).next().is_some_and(|(_, l)| l.contains(','));
    if dense {
        Ok(parse_dense_csv(text)?.pattern)
    } else {
        Ok(parse_coordinate(text)?.0)
    }
}

/// Parses a fully specified dense CSV matrix.
pub fn parse_matrix_csv(text: &str) -> Result<DenseMatrix> {
    let m = parse_dense_csv(text)?;
    if m.pattern.complement_len() > 0 {
        return Err(Error::Parse {
            line: 1,
            message: "matrix contains NA cells".into(),
        });
    }
    Ok(m.zero_filled())
}

pub fn write_coordinate(m: &ObservedMatrix) -> String {
    let mut out = format!("{} {}\n", m.pattern.n1(), m.pattern.n2());
    for (&(i, j), &v) in m.pattern.entries().iter().zip(&m.values) {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, format_sig(v));
    }
    out
}

pub fn write_pattern(p: &ObservationPattern) -> String {
    let mut out = format!("{} {}\n", p.n1(), p.n2());
    for &(i, j) in p.entries() {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}

pub fn write_dense_csv(m: &ObservedMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.pattern.n1() {
        let row: Vec<String> = (0..m.pattern.n2())
            .map(|j| m.get(i, j).map_or_else(|| "NA".to_string(), format_sig))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(y: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..y.rows() {
        let row: Vec<String> = y.row(i).iter().map(|&v| format_sig(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(3.550510257216822), "3.55051026");
        assert_eq!(format_sig(-0.000123456789123), "-0.000123456789");
        assert_eq!(format_sig(1.5e-9), "1.5e-9");
        assert_eq!(format_sig(123456789012.0), "1.23456789e11");
        assert_eq!(format_sig(174.0), "174");
    }

    #[test]
    fn coordinate_round_trip() {
        let text = "# comment\n3 3\n1 2 0.5\n3 1 -2\n\n2 2 1e-3\n";
        let (p, m) = parse_coordinate(text).unwrap();
        assert_eq!(p.m(), 3);
        let m = m.unwrap();
        assert_eq!(m.get(2, 0), Some(-2.0));
        let again = parse_observed(&write_coordinate(&m)).unwrap();
        assert_eq!(again, m);
        let (p2, none) = parse_coordinate(&write_pattern(&p)).unwrap();
        assert_eq!(p2, p);
        assert!(none.is_none());
    }

    #[test]
    fn dense_round_trip() {
        let text = "NA,1,2\n3,NA,4.5\n";
        let m = parse_observed(text).unwrap();
        assert_eq!(m.pattern.m(), 4);
        assert_eq!(m.get(1, 2), Some(4.5));
        assert_eq!(write_dense_csv(&m), text);
    }

    #[test]
    fn parse_errors_carry_lines() {
        assert!(matches!(parse_coordinate("2 2\n1 1 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_coordinate("2 2\n3 1 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_dense_csv("1,2\n3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_coordinate("2 2\n1 1 1\n2 2\n").is_err());
    }
}
