//! Host-side merge: 2D block copy of each column group's first partial and
//! block reduction of the remaining ones.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::partition::plan::TilePlan;
use crate::profile::{transfer_seconds, CostProfile};
use crate::scalar::Scalar;
use crate::sim::kernel::CorePartial;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeCost {
    pub copy: f64,
    pub reduce: f64,
    /// Summing rows split between cores of one cluster.
    pub split_rows: f64,
}

impl MergeCost {
    pub fn total(&self) -> f64 {
        self.copy + self.reduce + self.split_rows
    }
}

/// `dp * tile_bytes / host_bw + (sp - 1) * dp * tile_elems / add_host`, with
/// `tile = n x tile_cols`, plus `split_elems / add_host`.
pub fn merge_seconds(
    n: usize,
    sp: usize,
    dp: usize,
    tile_cols: usize,
    elem_bytes: usize,
    split_elems: usize,
    profile: &CostProfile,
) -> MergeCost {
    let tile_elems = (n * tile_cols) as f64;
    let row_bytes = (tile_cols * elem_bytes) as f64;
    let add = profile.add_host.closest(tile_cols as f64);
    MergeCost {
        copy: transfer_seconds(dp as f64 * tile_elems * elem_bytes as f64, profile.host_bw.closest(row_bytes)),
        reduce: (sp.saturating_sub(1) * dp) as f64 * tile_elems / add,
        split_rows: split_elems as f64 / add,
    }
}

/// Copy of the `n x k` feature matrix into per-cluster tiles on the host.
pub fn other_seconds(n: usize, k: usize, elem_bytes: usize, profile: &CostProfile) -> f64 {
    let row_bytes = (k * elem_bytes) as f64;
    transfer_seconds((n * k * elem_bytes) as f64, profile.host_bw.closest(row_bytes))
}

pub fn plan_merge_cost(plan: &TilePlan, profile: &CostProfile) -> MergeCost {
    let dp = plan.tile_cols.len();
    let sp = plan.clusters.len() / dp.max(1);
    let tile_cols = plan.tile_cols.iter().map(|r| r.len()).max().unwrap_or(0);
    let split_elems = plan
        .clusters
        .iter()
        .map(|c| c.shared_rows.iter().map(|s| s.owners.len() - 1).sum::<usize>() * c.tile_cols())
        .sum();
    merge_seconds(plan.n, sp, dp, tile_cols, plan.elem_bytes(), split_elems, profile)
}

/// Combines per-cluster, per-core partials (indexed like `plan.clusters`)
/// into the `n x k` output, reducing in cluster then core order.
pub fn merge<T: Scalar>(
    partials: &[Vec<CorePartial<T>>],
    plan: &TilePlan,
    profile: &CostProfile,
) -> Result<(DenseMatrix<T>, f64)> {
    if partials.len() != plan.clusters.len() {
        return Err(Error::DimensionMismatch {
            op: "merge",
            expected: format!("{} cluster partials", plan.clusters.len()),
            found: partials.len().to_string(),
        });
    }
    let (n, k) = (plan.n, plan.k);
    let mut acc = vec![T::Acc::default(); n * k];
    for (cluster, parts) in plan.clusters.iter().zip(partials) {
        if parts.len() != cluster.cores.len() {
            return Err(Error::DimensionMismatch {
                op: "merge",
                expected: format!("{} core partials in cluster {}", cluster.cores.len(), cluster.index),
                found: parts.len().to_string(),
            });
        }
        let cols = cluster.feature_cols.clone();
        for p in parts {
            if p.values.shape() != (p.rows.len(), cols.len()) || p.rows.end > n {
                return Err(Error::DimensionMismatch {
                    op: "merge",
                    expected: format!("{} x {} partial within {n} rows", p.rows.len(), cols.len()),
                    found: format!("{:?} at rows {:?}", p.values.shape(), p.rows),
                });
            }
            for (i, r) in p.rows.clone().enumerate() {
                let dst = &mut acc[r * k + cols.start..r * k + cols.end];
                for (d, &v) in dst.iter_mut().zip(p.values.row(i)) {
                    *d = T::acc_add(*d, v.widen()).ok_or(Error::Overflow("merge"))?;
                }
            }
        }
    }
    let values = acc
        .into_iter()
        .map(|a| T::narrow(a).ok_or(Error::Overflow("merge")))
        .collect::<Result<Vec<_>>>()?;
    Ok((DenseMatrix::new(n, k, values)?, plan_merge_cost(plan, profile).total()))
}
