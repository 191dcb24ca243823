//! File formats: TSV matrices and JSON results.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lars::{ChangePointSet, PathRecord};
use crate::linops::ObservationMatrix;

/// Parses a square matrix: one row per line, tab-separated, no header.
/// Blank trailing lines are ignored.
pub fn parse_matrix_tsv(text: &str, path: &Path) -> Result<ObservationMatrix> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split('\t')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(lineno, format!("not a finite number: {tok:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    lineno,
                    format!("row has {} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(parse_err(1, "empty matrix".into()));
    }
    if rows[0].len() != n {
        return Err(parse_err(
            1,
            format!("matrix must be square, got {n} rows of {} fields", rows[0].len()),
        ));
    }
    ObservationMatrix::from_rows(rows).map_err(|e| parse_err(1, e.to_string()))
}

pub fn read_matrix_tsv(path: &Path) -> Result<ObservationMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_tsv(&text, path)
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn format_matrix_tsv(m: &ObservationMatrix) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join("\t"));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_matrix_tsv(path: &Path, m: &ObservationMatrix) -> Result<()> {
    write_text(path, &format_matrix_tsv(m))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Input(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Reads a `{"rows": [...], "cols": [...]}` file and validates it for side `n`.
pub fn read_changepoints(path: &Path, n: usize) -> Result<ChangePointSet> {
    let cp: ChangePointSet = read_json(path)?;
    ChangePointSet::new(n, cp.rows, cp.cols)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub index: usize,
    pub value: f64,
}

/// Serialized form of one breakpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakpointRecord {
    pub lambda: f64,
    pub active: Vec<usize>,
    pub coeffs: Vec<CoeffEntry>,
}

pub fn path_records(path: &PathRecord) -> Vec<BreakpointRecord> {
    path.iter()
        .map(|bp| BreakpointRecord {
            lambda: bp.lambda,
            active: bp.active.indices().to_vec(),
            coeffs: bp
                .nonzero()
                .map(|(index, value)| CoeffEntry { index, value })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip_is_exact() {
        let m = ObservationMatrix::from_fn(3, |i, j| {
            (i as f64 + 0.1).powf(j as f64 - 7.3) * if (i + j) % 2 == 0 { -1.0 } else { 1.0 }
        })
        .unwrap();
        let back = parse_matrix_tsv(&format_matrix_tsv(&m), Path::new("m.tsv")).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ragged_rows_report_line() {
        let err = parse_matrix_tsv("1\t2\n3\n", Path::new("y.tsv")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_reports_line() {
        let err = parse_matrix_tsv("1\t2\n3\tx\n", Path::new("y.tsv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_matrix_tsv("1\t2\t3\n4\t5\t6\n", Path::new("y.tsv")).is_err());
        assert!(parse_matrix_tsv("", Path::new("y.tsv")).is_err());
        assert!(parse_matrix_tsv("1\tNaN\n1\t1\n", Path::new("y.tsv")).is_err());
    }
}
