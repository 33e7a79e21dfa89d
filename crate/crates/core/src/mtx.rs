//! Matrix Market coordinate reader and writer.
//!
//! Supported header: `%%MatrixMarket matrix coordinate <field> <symmetry>`
//! with field `real`, `integer` or `pattern` and symmetry `general` or
//! `symmetric`. Symmetric files are expanded to both triangles. Duplicate
//! entries are summed. Pattern entries carry the value 1.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

pub fn load_matrix_market<T: Scalar>(path: impl AsRef<Path>) -> Result<SparseMatrix<T>> {
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file))
}

pub fn parse_matrix_market<T: Scalar, R: BufRead>(reader: R) -> Result<SparseMatrix<T>> {
    let mut lines = reader.lines().enumerate();
    let err = |line: usize, msg: String| Error::Parse { line: line + 1, msg };

    let (hline, header) = match lines.next() {
        Some((i, l)) => (i, l?),
        None => return Err(err(0, "empty file".into())),
    };
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(err(hline, format!("malformed header '{header}'")));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(err(hline, "only 'matrix coordinate' files are supported".into()));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(err(hline, format!("unsupported field '{other}'"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(hline, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, T)> = Vec::new();
    let mut seen = 0usize;
    for (i, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((n_rows, n_cols, nnz)) = size else {
            if fields.len() != 3 {
                return Err(err(i, format!("malformed size line '{trimmed}'")));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(i, format!("non-numeric size '{s}'")))
            };
            let dims = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
            if symmetric && dims.0 != dims.1 {
                return Err(err(i, "symmetric matrix must be square".into()));
            }
            triplets.reserve(if symmetric { 2 * dims.2 } else { dims.2 });
            size = Some(dims);
            continue;
        };

        let expected = if field == Field::Pattern { 2 } else { 3 };
        if fields.len() != expected {
            return Err(err(i, format!("expected {expected} fields, got '{trimmed}'")));
        }
        let index = |s: &str, bound: usize, what: &str| -> Result<usize> {
            let v = s
                .parse::<usize>()
                .map_err(|_| err(i, format!("non-numeric {what} index '{s}'")))?;
            if v == 0 || v > bound {
                return Err(err(i, format!("{what} index {v} outside [1, {bound}]")));
            }
            Ok(v - 1)
        };
        let r = index(fields[0], n_rows, "row")?;
        let c = index(fields[1], n_cols, "column")?;
        let v = match field {
            Field::Pattern => T::one(),
            Field::Integer | Field::Real => {
                let raw = fields[2]
                    .parse::<f64>()
                    .map_err(|_| err(i, format!("non-numeric value '{}'", fields[2])))?;
                if field == Field::Integer && raw.fract() != 0.0 {
                    return Err(err(i, format!("non-integer value '{}'", fields[2])));
                }
                T::from_f64_exact(raw).ok_or_else(|| {
                    err(i, format!("value '{}' not representable as {}", fields[2], T::KIND))
                })?
            }
        };
        seen += 1;
        if seen > nnz {
            return Err(err(i, format!("more than {nnz} entries")));
        }
        triplets.push((r, c, v));
        if symmetric && r != c {
            triplets.push((c, r, v));
        }
    }

    let Some((n_rows, n_cols, nnz)) = size else {
        return Err(err(hline, "missing size line".into()));
    };
    if seen != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header declares {nnz} entries but file has {seen}"),
        });
    }
    SparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

/// Writes a `general` coordinate file with 1-based indices.
pub fn write_matrix_market<T: Scalar, W: Write>(m: &SparseMatrix<T>, mut out: W) -> Result<()> {
    let field = if T::KIND.is_integer() { "integer" } else { "real" };
    writeln!(out, "%%MatrixMarket matrix coordinate {field} general")?;
    writeln!(out, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (r, c, v) in m.iter() {
        writeln!(out, "{} {} {}", r + 1, c + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<SparseMatrix<i32>> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn general_file_is_zero_based() {
        let m = parse("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 5\n2 2 7\n")
            .unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(0, 0, 5), (1, 1, 7)]);
    }

    #[test]
    fn symmetric_file_expands() {
        let m = parse("%%MatrixMarket matrix coordinate integer symmetric\n% c\n2 2 1\n2 1 3\n")
            .unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(0, 1, 3), (1, 0, 3)]);
    }

    #[test]
    fn zero_index_is_rejected_with_line() {
        let e = parse("%%MatrixMarket matrix coordinate integer general\n2 2 1\n0 1 3\n")
            .unwrap_err();
        match e {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse("%%MatrixMarket matrix array real general\n1 1\n1\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate integer general\n2 2 1\n1 x 3\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate integer general\n2 2 1\n3 1 3\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 3\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 0.5\n").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn duplicates_summed_and_pattern() {
        let m = parse("%%MatrixMarket matrix coordinate pattern general\n2 3 3\n1 3\n1 3\n2 1\n")
            .unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(0, 2, 2), (1, 0, 1)]);
    }

    #[test]
    fn write_then_read() {
        let m = parse("%%MatrixMarket matrix coordinate integer general\n3 3 2\n1 2 -4\n3 3 9\n")
            .unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), m);
    }
}
