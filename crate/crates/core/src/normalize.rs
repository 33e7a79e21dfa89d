//! Adjacency normalization for the supported GNN models.
//!
//! The input is read as a binary structure: stored values are ignored.
//! Integer element kinds encode each real weight `w` as `round(w * scale)`;
//! callers divide aggregation results by the same scale (see
//! [`Scalar::descale`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

pub const DEFAULT_FIXED_POINT_SCALE: i64 = 1 << 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GnnKind {
    Gcn,
    Gin,
    Sage,
}

impl fmt::Display for GnnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GnnKind::Gcn => "gcn",
            GnnKind::Gin => "gin",
            GnnKind::Sage => "sage",
        })
    }
}

impl FromStr for GnnKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(GnnKind::Gcn),
            "gin" => Ok(GnnKind::Gin),
            "sage" => Ok(GnnKind::Sage),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

/// Builds the aggregation matrix `A'` for `model`.
///
/// * GCN: `A + I` (existing diagonal replaced), weights `1/sqrt((d_i+1)(d_j+1))`
///   with `d` the off-diagonal degree.
/// * SAGE: row mean over stored neighbours, weight `1/d_i`.
/// * GIN: `A` with `1 + eps` added on the diagonal.
pub fn normalize_adjacency<T: Scalar>(
    m: &SparseMatrix<T>,
    model: GnnKind,
    eps: f64,
    scale: i64,
) -> Result<SparseMatrix<T>> {
    if m.n_rows() != m.n_cols() {
        return Err(Error::NotSquare {
            rows: m.n_rows(),
            cols: m.n_cols(),
        });
    }
    let n = m.n_rows();
    let weight = |w: f64| T::from_weight(w, scale).ok_or(Error::Overflow("fixed-point weight"));

    let triplets: Vec<(usize, usize, T)> = match model {
        GnnKind::Gcn => {
            let mut deg = vec![0usize; n];
            for (r, c, _) in m.iter() {
                if r != c {
                    deg[r] += 1;
                }
            }
            let norm = |i: usize, j: usize| 1.0 / (((deg[i] + 1) * (deg[j] + 1)) as f64).sqrt();
            let mut t = Vec::with_capacity(m.nnz() + n);
            for (r, c, _) in m.iter().filter(|&(r, c, _)| r != c) {
                t.push((r, c, weight(norm(r, c))?));
            }
            for i in 0..n {
                t.push((i, i, weight(norm(i, i))?));
            }
            t
        }
        GnnKind::Sage => {
            let deg = m.row_nnz();
            m.iter()
                .map(|(r, c, _)| Ok((r, c, weight(1.0 / deg[r] as f64)?)))
                .collect::<Result<_>>()?
        }
        GnnKind::Gin => {
            let one = weight(1.0)?;
            let self_term = weight(1.0 + eps)?;
            let mut t: Vec<(usize, usize, T)> = m.iter().map(|(r, c, _)| (r, c, one)).collect();
            t.extend((0..n).map(|i| (i, i, self_term)));
            t
        }
    };
    let out = SparseMatrix::from_triplets(n, n, triplets)?;
    Ok(out.with_format(m.format()))
}
