use std::ops::Range;

use crate::config::SyncMode;
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SparseFormat, SparseMatrix};
use crate::partition::plan::CorePlan;
use crate::profile::{thread_scaling, CostProfile};
use crate::scalar::Scalar;
use crate::topology::PimTopology;

/// Output rows produced by one core, `rows.len() x tile_cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorePartial<T> {
    pub rows: Range<usize>,
    pub values: DenseMatrix<T>,
}

/// Modeled time of one core:
/// `nnz * per_op_cost(tile_cols) / thread_scaling(threads)` plus the
/// split-row synchronization term, which is not parallelized.
pub fn core_kernel_seconds(
    nnz: usize,
    threads: usize,
    sync_ops: usize,
    tile_cols: usize,
    profile: &CostProfile,
    topo: &PimTopology,
) -> f64 {
    if nnz == 0 {
        return 0.0;
    }
    let per_op = profile.per_op_cost(tile_cols);
    nnz as f64 * per_op / thread_scaling(threads, topo) + sync_ops as f64 * per_op
}

/// Serialized commits under the mutex, or slot merges done by thread 0.
pub fn sync_ops(core: &CorePlan) -> usize {
    match core.threads.sync {
        SyncMode::CoarseLock => core.threads.lock_writes(),
        SyncMode::LockFree => core.threads.partial_slots,
    }
}

pub fn core_time(core: &CorePlan, tile_cols: usize, profile: &CostProfile, topo: &PimTopology) -> f64 {
    core_kernel_seconds(
        core.span.nnz(),
        core.threads.spans.len(),
        sync_ops(core),
        tile_cols,
        profile,
        topo,
    )
}

/// Runs one core's share of `slice * tile`.
///
/// Thread spans are contiguous pieces of the core span in nonzero order and
/// thread partials are combined in thread order, so accumulating the core
/// span front to back gives the same result as the threaded execution.
pub fn kernel_execute<T: Scalar>(
    slice: &SparseMatrix<T>,
    core: &CorePlan,
    tile: &DenseMatrix<T>,
    profile: &CostProfile,
    topo: &PimTopology,
) -> Result<(CorePartial<T>, f64)> {
    if core.threads.scratchpad_bytes > topo.scratchpad_capacity {
        return Err(Error::ScratchpadOverflow {
            cluster: 0,
            core: core.id,
            needed: core.threads.scratchpad_bytes,
            capacity: topo.scratchpad_capacity,
        });
    }
    if tile.n_rows() != slice.n_cols() {
        return Err(Error::DimensionMismatch {
            op: "kernel_execute",
            expected: format!("{} feature tile rows", slice.n_cols()),
            found: tile.n_rows().to_string(),
        });
    }
    let cols = tile.n_cols();
    let rows = core.span.rows.clone();
    let mut acc = vec![T::Acc::default(); rows.len() * cols];
    let values = slice.values();
    let colind = slice.colind();
    let mut fma = |r: usize, p: usize| -> Result<()> {
        let a = values[p];
        let src = tile.row(colind[p]);
        let dst = &mut acc[(r - rows.start) * cols..(r - rows.start + 1) * cols];
        for (d, &x) in dst.iter_mut().zip(src) {
            *d = T::mul_add(*d, a, x).ok_or(Error::Overflow("kernel_execute"))?;
        }
        Ok(())
    };
    let nz = &core.span.nz;
    match slice.format() {
        SparseFormat::Csr => {
            let rowptr = slice.rowptr();
            for r in rows.clone() {
                for p in rowptr[r].max(nz.start)..rowptr[r + 1].min(nz.end) {
                    fma(r, p)?;
                }
            }
        }
        SparseFormat::Coo => {
            let rowind = slice.rowind();
            for p in nz.clone() {
                fma(rowind[p], p)?;
            }
        }
    }
    let out = acc
        .into_iter()
        .map(|a| T::narrow(a).ok_or(Error::Overflow("kernel_execute")))
        .collect::<Result<Vec<_>>>()?;
    let partial = CorePartial {
        values: DenseMatrix::new(rows.len(), cols, out)?,
        rows,
    };
    Ok((partial, core_time(core, cols, profile, topo)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scheme;
    use crate::partition::balance::{assign_within_core, Span};
    use crate::profile::SizeTable;

    fn core(offsets: &[usize], span: Span, threads: usize, scheme: Scheme, sync: SyncMode, topo: &PimTopology) -> CorePlan {
        CorePlan {
            id: 0,
            threads: assign_within_core(offsets, &span, threads, scheme, sync, 4, 4, topo).unwrap(),
            span,
            adjacency_bytes: 0,
            feature_bytes: 0,
            output_bytes: 0,
        }
    }

    #[test]
    fn thousand_nonzeros_one_thread() {
        let mut profile = CostProfile::constant(1.0, 1.0, 1.0, 1.0);
        profile.fma_core = SizeTable::new(vec![(64.0, 5e5), (128.0, 1e6)]).unwrap();
        let t = core_kernel_seconds(1000, 1, 0, 128, &profile, &PimTopology::default());
        assert!((t - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn zero_nnz_core() {
        let topo = PimTopology::default();
        let o = vec![0, 0, 0];
        let c = core(&o, Span { rows: 0..0, nz: 0..0 }, 4, Scheme::Cp, SyncMode::LockFree, &topo);
        let a = SparseMatrix::<i32>::zeros(2, 2);
        let f = DenseMatrix::from_fn(2, 3, |i, j| (i + j) as i32);
        let (p, t) = kernel_execute(&a, &c, &f, &CostProfile::default(), &topo).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(p.values.shape(), (0, 3));
    }

    #[test]
    fn partial_span_of_split_row() {
        let topo = PimTopology::default();
        // row 0 has 4 nonzeros, the core owns the last two
        let a = SparseMatrix::from_triplets(1, 4, vec![(0, 0, 1), (0, 1, 2), (0, 2, 3), (0, 3, 4)])
            .unwrap()
            .to_coo();
        let o = vec![0, 4];
        let c = core(&o, Span { rows: 0..1, nz: 2..4 }, 2, Scheme::Cp, SyncMode::LockFree, &topo);
        let f = DenseMatrix::from_fn(4, 1, |i, _| 10i32.pow(i as u32));
        let (p, _) = kernel_execute(&a, &c, &f, &CostProfile::default(), &topo).unwrap();
        assert_eq!(p.values.values(), &[3 * 100 + 4 * 1000]);
        let (p, _) = kernel_execute(&a.to_csr(), &c, &f, &CostProfile::default(), &topo).unwrap();
        assert_eq!(p.values.values(), &[3 * 100 + 4 * 1000]);
    }

    #[test]
    fn threads_scale_to_saturation() {
        let topo = PimTopology {
            threads_per_core: 24,
            ..PimTopology::default()
        };
        let o: Vec<usize> = (0..=480).collect();
        let span = Span::whole(&o);
        let p = CostProfile::default();
        let t: Vec<f64> = (1..=24)
            .map(|th| core_time(&core(&o, span.clone(), th, Scheme::Re, SyncMode::LockFree, &topo), 4, &p, &topo))
            .collect();
        assert!(t[..16].windows(2).all(|w| w[1] < w[0]));
        assert!(t[15..].iter().all(|&x| x == t[15]));
    }

    #[test]
    fn coarse_lock_pays_for_split_rows() {
        let topo = PimTopology::default();
        let o = vec![0, 5, 10, 12];
        let span = Span::whole(&o);
        let p = CostProfile::default();
        let lf = core(&o, span.clone(), 4, Scheme::Cp, SyncMode::LockFree, &topo);
        let cg = core(&o, span, 4, Scheme::Cp, SyncMode::CoarseLock, &topo);
        let per_op = p.per_op_cost(4);
        let base = 12.0 * per_op / 4.0;
        assert!((core_time(&lf, 4, &p, &topo) - (base + 3.0 * per_op)).abs() < 1e-18);
        assert!((core_time(&cg, 4, &p, &topo) - (base + 5.0 * per_op)).abs() < 1e-18);
    }
}
