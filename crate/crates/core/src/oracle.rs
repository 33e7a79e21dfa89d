//! Dense reference product used to check every SpMM path.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

/// `A * F` by expanding `A` to dense and running the plain triple loop.
pub fn dense_spmm_oracle<T: Scalar>(a: &SparseMatrix<T>, f: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.n_cols() != f.n_rows() {
        return Err(Error::DimensionMismatch {
            op: "dense_spmm_oracle",
            expected: format!("{} feature rows", a.n_cols()),
            found: format!("{}", f.n_rows()),
        });
    }
    let ad = a.to_dense();
    dense_matmul(&ad, f, "dense_spmm_oracle")
}

/// Exact dense product with a wide accumulator.
pub(crate) fn dense_matmul<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    op: &'static str,
) -> Result<DenseMatrix<T>> {
    if a.n_cols() != b.n_rows() {
        return Err(Error::DimensionMismatch {
            op,
            expected: format!("{} rows", a.n_cols()),
            found: format!("{}", b.n_rows()),
        });
    }
    let (n, m, k) = (a.n_rows(), a.n_cols(), b.n_cols());
    let mut out = Vec::with_capacity(n * k);
    for i in 0..n {
        for j in 0..k {
            let mut acc = T::Acc::default();
            for l in 0..m {
                acc = T::mul_add(acc, a.get(i, l), b.get(l, j)).ok_or(Error::Overflow(op))?;
            }
            out.push(T::narrow(acc).ok_or(Error::Overflow(op))?);
        }
    }
    DenseMatrix::new(n, k, out)
}
