//! Functional and cost simulation of the planned aggregation.

pub mod baseline;
pub mod kernel;
pub mod merge;
pub mod report;
pub mod transfer;

pub use baseline::{simulate_baseline, BaselineKind};
pub use kernel::{core_kernel_seconds, kernel_execute, CorePartial};
pub use merge::{merge, merge_seconds, other_seconds, MergeCost};
pub use report::{resource_utilization, ClusterReport, CoreReport, ExecutionReport, REPORT_SCHEMA_VERSION};
pub use transfer::{host_pim_transfer, padded_transfer, pim_host_transfer, BankPayload, TransferCost};

use std::thread;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SparseMatrix};
use crate::partition::capacity::validate_capacity;
use crate::partition::plan::{LoadedGraph, TilePlan};
use crate::profile::CostProfile;
use crate::scalar::Scalar;

/// Report for `plan` without executing any arithmetic.
pub fn simulate_cost(plan: &TilePlan, profile: &CostProfile, scheme: &str) -> ExecutionReport {
    let topo = &plan.topology;
    let to = host_pim_transfer(plan, profile);
    let from = pim_host_transfer(plan, profile);
    let mut r = ExecutionReport::empty(scheme, Some(plan.config), plan.k);
    let mut core_idx = 0;
    for cl in &plan.clusters {
        let tile_cols = cl.tile_cols();
        let mut cores = Vec::with_capacity(cl.cores.len());
        for c in &cl.cores {
            cores.push(CoreReport {
                id: c.id,
                nnz: c.span.nnz(),
                rows: c.span.rows.len(),
                t_kernel: kernel::core_time(c, tile_cols, profile, topo),
                bytes_to: c.feature_bytes,
                bytes_from: c.output_bytes,
                padding_to: to.padding_per_core[core_idx].1,
                padding_from: from.padding_per_core[core_idx].1,
                lock_writes: c.threads.lock_writes(),
                partial_slots: c.threads.partial_slots,
            });
            core_idx += 1;
        }
        r.clusters.push(ClusterReport {
            index: cl.index,
            device: cl.device,
            nnz: cl.cores.iter().map(|c| c.span.nnz()).sum(),
            t_kernel: cores.iter().map(|c| c.t_kernel).fold(0.0, f64::max),
            bytes_to: cores.iter().map(|c| c.bytes_to).sum(),
            bytes_from: cores.iter().map(|c| c.bytes_from).sum(),
            cores,
        });
    }
    r.t_host_pim = to.seconds;
    r.t_kernel = r.clusters.iter().map(|c| c.t_kernel).fold(0.0, f64::max);
    r.t_pim_host = from.seconds;
    r.t_merge = merge::plan_merge_cost(plan, profile).total();
    r.t_other = other_seconds(plan.n, plan.k, plan.elem_bytes(), profile);
    r.bytes_to_pim = to.bytes;
    r.bytes_from_pim = from.bytes;
    r.padding_to_pim = to.padding;
    r.padding_from_pim = from.padding;
    r.max_nnz_per_core = plan.max_nnz_per_core();
    r.max_bytes_to_core = to.max_bytes;
    r.max_bytes_from_core = from.max_bytes;
    r.active_cores = plan.active_cores();
    r.idle_cores = plan.idle_cores();
    r.edges = plan.total_nnz() as u64;
    r.finish(profile.peak_pim_ops);
    r
}

/// Executes `plan` over its slices: per-cluster kernels (in parallel across
/// clusters) followed by the host merge in cluster-index order.
pub(crate) fn execute<T: Scalar>(
    plan: &TilePlan,
    slices: &[SparseMatrix<T>],
    f: &DenseMatrix<T>,
    profile: &CostProfile,
) -> Result<DenseMatrix<T>> {
    let n_cols = plan.slice_cols.last().map_or(0, |r| r.end);
    if f.shape() != (n_cols, plan.k) {
        return Err(Error::DimensionMismatch {
            op: "simulate_aggregation",
            expected: format!("{n_cols} x {} feature matrix", plan.k),
            found: format!("{} x {}", f.n_rows(), f.n_cols()),
        });
    }
    let run_cluster = |ci: usize| -> Result<Vec<CorePartial<T>>> {
        let cl = &plan.clusters[ci];
        let tile = f.block(cl.feature_rows.clone(), cl.feature_cols.clone());
        cl.cores
            .iter()
            .map(|c| {
                kernel_execute(&slices[cl.slice], c, &tile, profile, &plan.topology)
                    .map(|(p, _)| p)
                    .map_err(|e| match e {
                        Error::ScratchpadOverflow { core, needed, capacity, .. } => Error::ScratchpadOverflow {
                            cluster: cl.index,
                            core,
                            needed,
                            capacity,
                        },
                        other => other,
                    })
            })
            .collect()
    };
    let n_clusters = plan.clusters.len();
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(n_clusters).max(1);
    let partials: Vec<Result<Vec<CorePartial<T>>>> = if workers == 1 {
        (0..n_clusters).map(run_cluster).collect()
    } else {
        let chunk = n_clusters.div_ceil(workers);
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let run = &run_cluster;
                    s.spawn(move || {
                        (w * chunk..((w + 1) * chunk).min(n_clusters))
                            .map(run)
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("cluster worker panicked"))
                .collect()
        })
    };
    let partials = partials.into_iter().collect::<Result<Vec<_>>>()?;
    merge(&partials, plan, profile).map(|(out, _)| out)
}

/// Runs the aggregation `A' * F` for a loaded graph, returning the exact
/// output and the cost report.
pub fn simulate_aggregation<T: Scalar>(
    graph: &LoadedGraph<T>,
    f: &DenseMatrix<T>,
    profile: &CostProfile,
) -> Result<(DenseMatrix<T>, ExecutionReport)> {
    simulate_plan(&graph.plan, &graph.slices, f, profile)
}

/// Like [`simulate_aggregation`] for a plan built separately over `slices`
/// (e.g. the same loaded graph planned for another hidden size).
pub fn simulate_plan<T: Scalar>(
    plan: &TilePlan,
    slices: &[SparseMatrix<T>],
    f: &DenseMatrix<T>,
    profile: &CostProfile,
) -> Result<(DenseMatrix<T>, ExecutionReport)> {
    validate_capacity(plan, &plan.topology)?;
    let out = execute(plan, slices, f, profile)?;
    Ok((out, simulate_cost(plan, profile, "paf")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BalanceMode, PafConfig, SyncMode};
    use crate::matrix::SparseFormat;
    use crate::oracle::dense_spmm_oracle;
    use crate::topology::PimTopology;

    fn cfg(sp: usize, dp: usize, grp: usize, format: SparseFormat, mode: BalanceMode, sync: SyncMode) -> PafConfig {
        PafConfig {
            sp,
            dp,
            grp,
            format,
            cluster_scheme: mode,
            core_scheme: mode,
            sync,
        }
    }

    fn graph8() -> SparseMatrix<i32> {
        let t = vec![
            (0, 1, 2), (0, 5, 1), (1, 0, 3), (1, 2, 1), (1, 3, 1), (1, 4, 1), (2, 7, 5),
            (3, 3, 1), (4, 0, 1), (4, 6, 2), (5, 5, 1), (6, 1, 1), (6, 2, 1), (7, 0, 4), (7, 7, 1),
        ];
        SparseMatrix::from_triplets(8, 8, t).unwrap()
    }

    fn small_topo() -> PimTopology {
        PimTopology {
            threads_per_core: 4,
            ..PimTopology::new(4, 4).unwrap()
        }
    }

    #[test]
    fn identity_returns_features() {
        let a = SparseMatrix::<i32>::identity(10);
        let f = DenseMatrix::from_fn(10, 6, |i, j| (i * 7 + j) as i32 - 20);
        let c = cfg(2, 2, 1, SparseFormat::Coo, BalanceMode::Edge, SyncMode::LockFree);
        let g = LoadedGraph::load(&a, 6, &c, &small_topo()).unwrap();
        let (out, r) = simulate_aggregation(&g, &f, &CostProfile::default()).unwrap();
        assert_eq!(out, f);
        assert!(r.bytes_from_pim >= (10 * 6 * 4) as u64);
    }

    #[test]
    fn four_cluster_plan_matches_oracle() {
        let a = graph8();
        let f = DenseMatrix::from_fn(8, 4, |i, j| (i as i32 - 3) * (j as i32 + 1));
        let expected = dense_spmm_oracle(&a, &f).unwrap();
        let c = cfg(2, 2, 1, SparseFormat::Csr, BalanceMode::Edge, SyncMode::CoarseLock);
        let g = LoadedGraph::load(&a, 4, &c, &small_topo()).unwrap();
        let (out, r) = simulate_aggregation(&g, &f, &CostProfile::default()).unwrap();
        assert_eq!(out, expected);
        assert_eq!(r.t_total, r.component_sum());
    }

    #[test]
    fn rv_and_cp_agree_numerically() {
        let a = graph8();
        let f = DenseMatrix::from_fn(8, 4, |i, j| (i + 2 * j) as i32);
        let p = CostProfile::default();
        let rv = cfg(1, 4, 1, SparseFormat::Csr, BalanceMode::Vertex, SyncMode::LockFree);
        let cp = cfg(1, 4, 1, SparseFormat::Coo, BalanceMode::Edge, SyncMode::LockFree);
        let (o1, r1) = simulate_aggregation(&LoadedGraph::load(&a, 4, &rv, &small_topo()).unwrap(), &f, &p).unwrap();
        let (o2, r2) = simulate_aggregation(&LoadedGraph::load(&a, 4, &cp, &small_topo()).unwrap(), &f, &p).unwrap();
        assert_eq!(o1, o2);
        assert_ne!(r1.t_kernel, r2.t_kernel);
    }

    #[test]
    fn feature_shape_checked() {
        let a = graph8();
        let c = cfg(1, 4, 1, SparseFormat::Csr, BalanceMode::Vertex, SyncMode::LockFree);
        let g = LoadedGraph::load(&a, 4, &c, &small_topo()).unwrap();
        let f = DenseMatrix::<i32>::zeros(8, 3);
        assert!(matches!(
            simulate_aggregation(&g, &f, &CostProfile::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn capacity_checked_before_running() {
        let a = graph8();
        let c = cfg(1, 4, 1, SparseFormat::Csr, BalanceMode::Vertex, SyncMode::LockFree);
        let mut g = LoadedGraph::load(&a, 4, &c, &small_topo()).unwrap();
        g.plan.topology.bank_capacity = 8;
        let f = DenseMatrix::<i32>::zeros(8, 4);
        assert!(matches!(
            simulate_aggregation(&g, &f, &CostProfile::default()),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn deterministic_reports() {
        let a = graph8();
        let f = DenseMatrix::from_fn(8, 4, |i, j| (i * j) as i32);
        let c = cfg(2, 2, 1, SparseFormat::Coo, BalanceMode::Edge, SyncMode::LockFree);
        let g = LoadedGraph::load(&a, 4, &c, &small_topo()).unwrap();
        let (o1, r1) = simulate_aggregation(&g, &f, &CostProfile::default()).unwrap();
        let (o2, r2) = simulate_aggregation(&g, &f, &CostProfile::default()).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(r1.to_json().unwrap(), r2.to_json().unwrap());
    }
}
