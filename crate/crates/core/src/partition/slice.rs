use std::ops::Range;

use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

/// Splits `a` by column ranges, re-basing columns to each range start.
/// Every slice keeps all `n_rows` rows and the input's format.
pub fn slice_sparse<T: Scalar>(a: &SparseMatrix<T>, ranges: &[Range<usize>]) -> Vec<SparseMatrix<T>> {
    if ranges.len() == 1 && ranges[0] == (0..a.n_cols()) {
        return vec![a.clone()];
    }
    let mut parts: Vec<Vec<(usize, usize, T)>> = vec![Vec::new(); ranges.len()];
    for (r, c, v) in a.iter() {
        let s = slice_of(ranges, c);
        parts[s].push((r, c - ranges[s].start, v));
    }
    parts
        .into_iter()
        .zip(ranges)
        .map(|(t, range)| {
            SparseMatrix::from_triplets(a.n_rows(), range.len(), t)
                .expect("slice entries stay sorted and in range")
                .with_format(a.format())
        })
        .collect()
}

/// Row offsets (CSR `rowptr`) of every column slice, without copying values.
pub fn slice_row_offsets<T>(a: &SparseMatrix<T>, ranges: &[Range<usize>]) -> Vec<Vec<usize>> {
    structure_row_offsets(&a.rowptr(), a.colind(), ranges)
}

pub(crate) fn structure_row_offsets(rowptr: &[usize], colind: &[usize], ranges: &[Range<usize>]) -> Vec<Vec<usize>> {
    let n = rowptr.len() - 1;
    let mut counts = vec![vec![0usize; n + 1]; ranges.len()];
    for r in 0..n {
        for &c in &colind[rowptr[r]..rowptr[r + 1]] {
            counts[slice_of(ranges, c)][r + 1] += 1;
        }
    }
    for offsets in &mut counts {
        for r in 0..n {
            offsets[r + 1] += offsets[r];
        }
    }
    counts
}

fn slice_of(ranges: &[Range<usize>], col: usize) -> usize {
    ranges.partition_point(|r| r.end <= col)
}
