//! OR-Library set cover format.
//!
//! Whitespace separated tokens: `m n`, then `n` column costs, then for each
//! row a count `k` followed by `k` one-based column indices. Line breaks
//! carry no meaning.

use std::fmt::Write as _;
use std::path::Path;

use super::{Cost, InstanceError, Result, ScpInstance};

struct Tokens<'a> {
    inner: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, reading: impl FnOnce() -> String) -> Result<&'a str> {
        self.inner
            .next()
            .ok_or_else(|| InstanceError::TruncatedStream { reading: reading() })
    }

    fn next_int(&mut self, reading: impl Fn() -> String) -> Result<i64> {
        let tok = self.next(&reading)?;
        tok.parse::<i64>().map_err(|_| InstanceError::InvalidToken {
            token: tok.to_string(),
            reading: reading(),
        })
    }
}

pub fn parse_orlib(text: &str, name: impl Into<String>) -> Result<ScpInstance> {
    let mut toks = Tokens {
        inner: text.split_whitespace(),
    };
    let m = toks.next_int(|| "row count".into())?;
    let n = toks.next_int(|| "column count".into())?;
    if m <= 0 || n <= 0 {
        return Err(InstanceError::MalformedFile(format!(
            "dimensions must be positive, got m={m} n={n}"
        )));
    }
    let (m, n) = (m as usize, n as usize);

    let mut costs = Vec::with_capacity(n);
    for j in 0..n {
        let reading = || format!("cost of column {}", j + 1);
        let tok = toks.next(reading)?;
        let c = Cost::parse(tok).map_err(|_| InstanceError::InvalidToken {
            token: tok.to_string(),
            reading: reading(),
        })?;
        costs.push(c);
    }

    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let k = toks.next_int(|| format!("column count of row {}", i + 1))?;
        if k <= 0 {
            return Err(InstanceError::NonPositiveCount { row: i, count: k });
        }
        let mut row = Vec::with_capacity(k as usize);
        for t in 0..k {
            let idx = toks.next_int(|| format!("entry {} of row {}", t + 1, i + 1))?;
            if idx < 1 || idx as usize > n {
                return Err(InstanceError::IndexOutOfRange {
                    index: idx.max(0) as usize,
                    limit: n,
                    context: "OR-Library row (1-based)",
                });
            }
            row.push(idx as usize - 1);
        }
        rows.push(row);
    }
    let trailing = toks.inner.count();
    if trailing > 0 {
        return Err(InstanceError::TrailingData(trailing));
    }
    ScpInstance::from_rows(name, m, n, rows, costs)
}

/// Reads an OR-Library file; the instance is named after the file stem.
pub fn read_orlib(path: &Path) -> Result<ScpInstance> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_orlib(&text, name)
}

const PER_LINE: usize = 12;

pub fn write_orlib(inst: &ScpInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, " {} {}", inst.m(), inst.n());
    write_wrapped(&mut out, inst.costs().iter().map(|c| c.to_string()));
    for row in inst.rows() {
        let _ = writeln!(out, " {}", row.len());
        write_wrapped(&mut out, row.iter().map(|j| (j + 1).to_string()));
    }
    out
}

fn write_wrapped(out: &mut String, items: impl Iterator<Item = String>) {
    let mut on_line = 0;
    for item in items {
        out.push(' ');
        out.push_str(&item);
        on_line += 1;
        if on_line == PER_LINE {
            out.push('\n');
            on_line = 0;
        }
    }
    if on_line > 0 {
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t3;

    #[test]
    fn parses_t3_stream() {
        let inst = parse_orlib("3 3  1 1 1  1 1  2 1 2  2 2 3", "T3").unwrap();
        assert_eq!(inst, t3());
    }

    #[test]
    fn line_breaks_are_insignificant() {
        let inst = parse_orlib("3\n3\n1\n1 1 1\n1 2 1\n2 2 2 3\n", "T3").unwrap();
        assert_eq!(inst, t3());
    }

    #[test]
    fn truncated_stream() {
        let err = parse_orlib("3 3  1 1 1  1 1  2 1 2  2 2", "x").unwrap_err();
        assert!(matches!(err, InstanceError::TruncatedStream { .. }), "{err}");
        let err = parse_orlib("3 3 1 1", "x").unwrap_err();
        assert!(matches!(err, InstanceError::TruncatedStream { .. }));
    }

    #[test]
    fn bad_counts_and_indices() {
        let err = parse_orlib("1 1 5 0", "x").unwrap_err();
        assert!(matches!(err, InstanceError::NonPositiveCount { row: 0, count: 0 }));
        let err = parse_orlib("1 1 5 1 2", "x").unwrap_err();
        assert!(matches!(err, InstanceError::IndexOutOfRange { .. }));
        let err = parse_orlib("1 1 5 1 0", "x").unwrap_err();
        assert!(matches!(err, InstanceError::IndexOutOfRange { .. }));
        let err = parse_orlib("1 1 5 1 1 9", "x").unwrap_err();
        assert!(matches!(err, InstanceError::TrailingData(1)));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let t = t3();
        assert_eq!(parse_orlib(&write_orlib(&t), "T3").unwrap(), t);
    }
}
