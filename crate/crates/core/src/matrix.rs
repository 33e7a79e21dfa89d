//! Sparse (CSR/COO) and dense matrix types.
//!
//! Both sparse formats keep nonzeros in row-major order, so the `k`-th value
//! is the same edge whichever index arrays accompany it. Planning code relies
//! on this: nonzero ranges computed from CSR row offsets index COO data too.

use std::borrow::Cow;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparseFormat {
    Csr,
    Coo,
}

impl fmt::Display for SparseFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SparseFormat::Csr => "csr",
            SparseFormat::Coo => "coo",
        })
    }
}

impl FromStr for SparseFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csr" => Ok(SparseFormat::Csr),
            "coo" => Ok(SparseFormat::Coo),
            other => Err(format!("unknown sparse format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Indices {
    Csr { rowptr: Vec<usize>, colind: Vec<usize> },
    Coo { rowind: Vec<usize>, colind: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    indices: Indices,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        rowptr: Vec<usize>,
        colind: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if rowptr.len() != n_rows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "rowptr has length {} for {} rows",
                rowptr.len(),
                n_rows
            )));
        }
        if rowptr[0] != 0 {
            return Err(Error::InvalidMatrix("rowptr[0] must be 0".into()));
        }
        if let Some(i) = rowptr.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::InvalidMatrix(format!("rowptr decreases at row {i}")));
        }
        if rowptr[n_rows] != colind.len() || colind.len() != values.len() {
            return Err(Error::InvalidMatrix(format!(
                "rowptr ends at {} but colind/values have {}/{} entries",
                rowptr[n_rows],
                colind.len(),
                values.len()
            )));
        }
        for r in 0..n_rows {
            let cols = &colind[rowptr[r]..rowptr[r + 1]];
            if let Some(&c) = cols.iter().find(|&&c| c >= n_cols) {
                return Err(Error::InvalidMatrix(format!(
                    "column {c} out of range in row {r}"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "columns of row {r} not strictly increasing"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            indices: Indices::Csr { rowptr, colind },
            values,
        })
    }

    pub fn from_coo(
        n_rows: usize,
        n_cols: usize,
        rowind: Vec<usize>,
        colind: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if rowind.len() != colind.len() || colind.len() != values.len() {
            return Err(Error::InvalidMatrix(format!(
                "rowind/colind/values lengths differ: {}/{}/{}",
                rowind.len(),
                colind.len(),
                values.len()
            )));
        }
        for (i, (&r, &c)) in rowind.iter().zip(&colind).enumerate() {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry {i} at ({r}, {c}) out of range for {n_rows}x{n_cols}"
                )));
            }
            if i > 0 && (rowind[i - 1], colind[i - 1]) >= (r, c) {
                return Err(Error::InvalidMatrix(format!(
                    "entry {i} not sorted by (row, col)"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            indices: Indices::Coo { rowind, colind },
            values,
        })
    }

    /// Builds a COO matrix from unordered triplets, summing duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Result<Self> {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut rowind = Vec::with_capacity(triplets.len());
        let mut colind = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rowind.last() == Some(&r) && colind.last() == Some(&c) {
                let last = values.last_mut().expect("non-empty");
                let sum = T::acc_add(last.widen(), v.widen())
                    .and_then(T::narrow)
                    .ok_or(Error::Overflow("duplicate entry sum"))?;
                *last = sum;
            } else {
                rowind.push(r);
                colind.push(c);
                values.push(v);
            }
        }
        Self::from_coo(n_rows, n_cols, rowind, colind, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            indices: Indices::Csr {
                rowptr: (0..=n).collect(),
                colind: (0..n).collect(),
            },
            values: vec![T::one(); n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            indices: Indices::Csr {
                rowptr: vec![0; n_rows + 1],
                colind: Vec::new(),
            },
            values: Vec::new(),
        }
    }

    pub fn value_kind(&self) -> ValueKind {
        T::KIND
    }

    pub fn to_csr(&self) -> Self {
        match &self.indices {
            Indices::Csr { .. } => self.clone(),
            Indices::Coo { colind, .. } => Self {
                n_rows: self.n_rows,
                n_cols: self.n_cols,
                indices: Indices::Csr {
                    rowptr: self.rowptr().into_owned(),
                    colind: colind.clone(),
                },
                values: self.values.clone(),
            },
        }
    }

    pub fn to_coo(&self) -> Self {
        match &self.indices {
            Indices::Coo { .. } => self.clone(),
            Indices::Csr { colind, .. } => Self {
                n_rows: self.n_rows,
                n_cols: self.n_cols,
                indices: Indices::Coo {
                    rowind: self.rowind().into_owned(),
                    colind: colind.clone(),
                },
                values: self.values.clone(),
            },
        }
    }

    pub fn with_format(&self, format: SparseFormat) -> Self {
        match format {
            SparseFormat::Csr => self.to_csr(),
            SparseFormat::Coo => self.to_coo(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.iter() {
            d.set(r, c, v);
        }
        d
    }

    /// Applies `f` to every stored value, keeping the sparsity structure.
    pub fn try_map_values<U: Scalar>(
        &self,
        mut f: impl FnMut(usize, usize, T) -> Option<U>,
    ) -> Option<SparseMatrix<U>> {
        let values = self
            .iter()
            .map(|(r, c, v)| f(r, c, v))
            .collect::<Option<Vec<U>>>()?;
        Some(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            indices: self.indices.clone(),
            values,
        })
    }
}

impl<T> SparseMatrix<T> {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn format(&self) -> SparseFormat {
        match self.indices {
            Indices::Csr { .. } => SparseFormat::Csr,
            Indices::Coo { .. } => SparseFormat::Coo,
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn colind(&self) -> &[usize] {
        match &self.indices {
            Indices::Csr { colind, .. } | Indices::Coo { colind, .. } => colind,
        }
    }

    pub fn rowptr(&self) -> Cow<'_, [usize]> {
        match &self.indices {
            Indices::Csr { rowptr, .. } => Cow::Borrowed(rowptr),
            Indices::Coo { rowind, .. } => {
                let mut rowptr = vec![0usize; self.n_rows + 1];
                for &r in rowind {
                    rowptr[r + 1] += 1;
                }
                for r in 0..self.n_rows {
                    rowptr[r + 1] += rowptr[r];
                }
                Cow::Owned(rowptr)
            }
        }
    }

    pub fn rowind(&self) -> Cow<'_, [usize]> {
        match &self.indices {
            Indices::Coo { rowind, .. } => Cow::Borrowed(rowind),
            Indices::Csr { rowptr, .. } => {
                let mut rowind = Vec::with_capacity(self.values.len());
                for r in 0..self.n_rows {
                    rowind.extend(std::iter::repeat_n(r, rowptr[r + 1] - rowptr[r]));
                }
                Cow::Owned(rowind)
            }
        }
    }

    pub fn row_nnz(&self) -> Vec<usize> {
        self.rowptr().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_
    where
        T: Copy,
    {
        let rowind = self.rowind();
        let rows: Vec<usize> = rowind.into_owned();
        rows.into_iter()
            .zip(self.colind().iter().copied())
            .zip(self.values.iter().copied())
            .map(|((r, c), v)| (r, c, v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                op: "dense matrix",
                expected: format!("{} values", n_rows * n_cols),
                found: format!("{}", values.len()),
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![T::zero(); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for c in 0..n_cols {
                values.push(f(r, c));
            }
        }
        Self {
            n_rows,
            n_cols,
            values,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.values[r * self.n_cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.values[r * self.n_cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    /// Copies the `rows` x `cols` sub-block.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let (r0, c0) = (rows.start, cols.start);
        Self::from_fn(rows.len(), cols.len(), |r, c| self.get(r0 + r, c0 + c))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-wise checked sum.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "dense add",
                expected: format!("{:?}", self.shape()),
                found: format!("{:?}", other.shape()),
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| T::acc_add(a.widen(), b.widen()).and_then(T::narrow))
            .collect::<Option<Vec<T>>>()
            .ok_or(Error::Overflow("dense add"))?;
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values,
        })
    }

    pub fn value_kind(&self) -> ValueKind {
        T::KIND
    }

    pub fn elem_bytes(&self) -> usize {
        T::KIND.elem_bytes()
    }
}

impl<T> DenseMatrix<T> {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Per-row nonzero statistics (population standard deviation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub min_nnz: f64,
    pub max_nnz: f64,
    pub avg_nnz: f64,
    pub std_nnz: f64,
}

pub fn degree_stats<T>(m: &SparseMatrix<T>) -> DegreeStats {
    let counts = m.row_nnz();
    if counts.is_empty() {
        return DegreeStats {
            min_nnz: 0.0,
            max_nnz: 0.0,
            avg_nnz: 0.0,
            std_nnz: 0.0,
        };
    }
    let n = counts.len() as f64;
    let min = *counts.iter().min().unwrap() as f64;
    let max = *counts.iter().max().unwrap() as f64;
    let avg = counts.iter().sum::<usize>() as f64 / n;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - avg).powi(2))
        .sum::<f64>()
        / n;
    DegreeStats {
        min_nnz: min,
        max_nnz: max,
        avg_nnz: avg,
        std_nnz: var.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coo_to_csr_small() {
        let m = SparseMatrix::from_coo(2, 2, vec![0, 1], vec![0, 1], vec![1i32, 1]).unwrap();
        let csr = m.to_csr();
        assert_eq!(csr.format(), SparseFormat::Csr);
        assert_eq!(&*csr.rowptr(), &[0, 1, 2]);
        assert_eq!(csr.colind(), &[0, 1]);
    }

    #[test]
    fn empty_matrix_rowptr() {
        let m = SparseMatrix::<i32>::from_coo(3, 3, vec![], vec![], vec![]).unwrap();
        assert_eq!(&*m.to_csr().rowptr(), &[0, 0, 0, 0]);
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn rejects_unsorted_coo() {
        let err = SparseMatrix::from_coo(2, 2, vec![1, 0], vec![0, 0], vec![1i32, 1]);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_bad_rowptr() {
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 2, 1], vec![0, 1], vec![1i32, 1]).is_err());
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 1, 2], vec![0, 2], vec![1i32, 1]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![1, 1], vec![], Vec::<i32>::new()).is_err());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m =
            SparseMatrix::from_triplets(2, 2, vec![(1, 1, 2i32), (0, 0, 1), (1, 1, 3)]).unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(0, 0, 1), (1, 1, 5)]);
    }

    #[test]
    fn degree_stats_cases() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 1i32), (0, 1, 1), (1, 1, 1), (1, 2, 1), (2, 0, 1), (2, 2, 1)],
        )
        .unwrap();
        let s = degree_stats(&m);
        assert_eq!((s.min_nnz, s.max_nnz, s.avg_nnz, s.std_nnz), (2.0, 2.0, 2.0, 0.0));

        // rows [0, 4]: population std oracle sqrt(((0-2)^2 + (4-2)^2) / 2) = 2
        let m = SparseMatrix::from_triplets(2, 4, (0..4).map(|c| (1, c, 1i32)).collect()).unwrap();
        let s = degree_stats(&m);
        assert_eq!((s.min_nnz, s.max_nnz, s.avg_nnz, s.std_nnz), (0.0, 4.0, 2.0, 2.0));

        let s = degree_stats(&SparseMatrix::<i32>::zeros(0, 0));
        assert_eq!((s.min_nnz, s.max_nnz, s.avg_nnz, s.std_nnz), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn dense_block_and_add() {
        let d = DenseMatrix::from_fn(3, 4, |r, c| (r * 4 + c) as i32);
        let b = d.block(1..3, 2..4);
        assert_eq!(b.values(), &[6, 7, 10, 11]);
        let s = b.checked_add(&b).unwrap();
        assert_eq!(s.values(), &[12, 14, 20, 22]);
        let big = DenseMatrix::new(1, 1, vec![i8::MAX]).unwrap();
        assert!(big.checked_add(&big).is_err());
    }
}
