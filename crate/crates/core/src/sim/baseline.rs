//! Prior-work strategies expressed as plans on the same machine model.
//!
//! * `Grande`: feature rows split across devices, hidden columns split
//!   across the cores of each device, one core per cluster.
//! * `Sp1` / `Sp2`: one SpMV per feature column on one device, or on a pair
//!   of devices splitting the nonzeros evenly; rounds of SpMVs run back to
//!   back when there are more columns than device groups.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{BalanceMode, PafConfig, Scheme, SyncMode};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SparseFormat, SparseMatrix};
use crate::partition::balance::{split_span, Span};
use crate::partition::capacity::validate_capacity;
use crate::partition::geometry::{even_split, TileGeometry};
use crate::partition::plan::{build_cluster, ClusterSpec, Rules, TilePlan};
use crate::partition::slice::{slice_row_offsets, slice_sparse};
use crate::profile::CostProfile;
use crate::scalar::{Scalar, ValueKind};
use crate::sim::merge::other_seconds;
use crate::sim::report::ExecutionReport;
use crate::sim::{execute, simulate_cost};
use crate::topology::PimTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Grande,
    Sp1,
    Sp2,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Grande => "grande",
            BaselineKind::Sp1 => "sp1",
            BaselineKind::Sp2 => "sp2",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grande" => Ok(BaselineKind::Grande),
            "sp1" => Ok(BaselineKind::Sp1),
            "sp2" => Ok(BaselineKind::Sp2),
            other => Err(format!("unknown baseline '{other}'")),
        }
    }
}

/// Row-split, hidden-split layout: `sp = n_devices`, `dp = min(k, cores_per_device)`.
pub fn grande_plan(offsets: &[Vec<usize>], n: usize, k: usize, topo: &PimTopology, kind: ValueKind) -> Result<TilePlan> {
    topo.validate()?;
    let dp = k.min(topo.cores_per_device);
    let machine = PimTopology {
        clusters_per_device: dp,
        cores_per_cluster: 1,
        ..*topo
    };
    let cfg = PafConfig {
        sp: topo.n_devices,
        dp,
        grp: dp,
        format: SparseFormat::Csr,
        cluster_scheme: BalanceMode::Edge,
        core_scheme: BalanceMode::Edge,
        sync: SyncMode::LockFree,
    };
    crate::config::check_geometry(cfg.sp, dp, machine.total_clusters(), n, k)?;
    let rules = Rules {
        format: SparseFormat::Csr,
        cluster: Scheme::Re,
        core: Scheme::Re,
        sync: SyncMode::LockFree,
        elem_bytes: kind.elem_bytes(),
    };
    TilePlan::assemble(TileGeometry::new(n, k, cfg.sp, dp), offsets, &cfg, &machine, kind, &rules)
}

/// One round of `cols` SpMVs, each on `group` devices splitting the nonzeros.
pub fn spmv_round_plan(offsets: &[usize], n: usize, cols: usize, group: usize, topo: &PimTopology, kind: ValueKind) -> Result<TilePlan> {
    topo.validate()?;
    if cols * group > topo.n_devices {
        return Err(Error::Topology(format!(
            "{cols} SpMVs on {group} device(s) each need {} devices, machine has {}",
            cols * group,
            topo.n_devices
        )));
    }
    let machine = PimTopology {
        clusters_per_device: 1,
        cores_per_cluster: topo.cores_per_device,
        ..*topo
    };
    let rules = Rules {
        format: SparseFormat::Coo,
        cluster: Scheme::Cp,
        core: Scheme::Cp,
        sync: SyncMode::LockFree,
        elem_bytes: kind.elem_bytes(),
    };
    let halves = split_span(offsets, &Span::whole(offsets), group, Scheme::Cp);
    let mut clusters = Vec::with_capacity(cols * group);
    for j in 0..cols {
        for (h, span) in halves.iter().enumerate() {
            let idx = j * group + h;
            clusters.push(build_cluster(
                ClusterSpec {
                    index: idx,
                    device: idx,
                    slice: 0,
                    col_group: j,
                    offsets,
                    span: span.clone(),
                    feature_rows: 0..n,
                    feature_cols: j..j + 1,
                    first_core: idx * machine.cores_per_device,
                },
                &rules,
                &machine,
            )?);
        }
    }
    Ok(TilePlan {
        n,
        k: cols,
        config: PafConfig {
            sp: group,
            dp: cols,
            grp: 1,
            format: SparseFormat::Coo,
            cluster_scheme: BalanceMode::Edge,
            core_scheme: BalanceMode::Edge,
            sync: SyncMode::LockFree,
        },
        topology: machine,
        value_kind: kind,
        cluster_rule: Scheme::Cp,
        core_rule: Scheme::Cp,
        slice_cols: vec![0..n],
        tile_cols: even_split(cols, cols),
        clusters,
    })
}

fn spmv_group(kind: BaselineKind) -> usize {
    match kind {
        BaselineKind::Sp2 => 2,
        _ => 1,
    }
}

fn check_square<T>(a: &SparseMatrix<T>) -> Result<()> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    Ok(())
}

fn spmv_rounds(n_devices: usize, group: usize, k: usize) -> Result<Vec<std::ops::Range<usize>>> {
    let per_round = n_devices / group;
    if per_round == 0 {
        return Err(Error::Topology(format!("SpMV on {group} devices needs at least {group} devices")));
    }
    Ok((0..k.div_ceil(per_round))
        .map(|r| r * per_round..((r + 1) * per_round).min(k))
        .collect())
}

/// Cost-only baseline report from the graph structure.
pub fn baseline_cost<T: Scalar>(
    kind: BaselineKind,
    a: &SparseMatrix<T>,
    k: usize,
    topo: &PimTopology,
    profile: &CostProfile,
) -> Result<ExecutionReport> {
    check_square(a)?;
    let value_kind = T::KIND;
    let n = a.n_rows();
    match kind {
        BaselineKind::Grande => {
            let g = TileGeometry::new(n, k, topo.n_devices, 1);
            let offsets = slice_row_offsets(&a.with_format(SparseFormat::Csr), &g.slice_cols);
            let plan = grande_plan(&offsets, n, k, topo, value_kind)?;
            validate_capacity(&plan, &plan.topology)?;
            Ok(simulate_cost(&plan, profile, kind.as_str()))
        }
        BaselineKind::Sp1 | BaselineKind::Sp2 => {
            let group = spmv_group(kind);
            let offsets = slice_row_offsets(a, &[0..n]).remove(0);
            let mut report = ExecutionReport::empty(kind.as_str(), None, k);
            let mut last: Option<(usize, ExecutionReport)> = None;
            for cols in spmv_rounds(topo.n_devices, group, k)? {
                // full rounds share one plan
                let r = match &last {
                    Some((c, r)) if *c == cols.len() => r.clone(),
                    _ => {
                        let plan = spmv_round_plan(&offsets, n, cols.len(), group, topo, value_kind)?;
                        validate_capacity(&plan, &plan.topology)?;
                        let r = simulate_cost(&plan, profile, kind.as_str());
                        last = Some((cols.len(), r.clone()));
                        r
                    }
                };
                report.accumulate(&r);
            }
            finish_rounds(&mut report, n, k, value_kind, profile);
            Ok(report)
        }
    }
}

fn finish_rounds(report: &mut ExecutionReport, n: usize, k: usize, kind: ValueKind, profile: &CostProfile) {
    // host-side feature layout happens once, not once per round
    report.t_other = other_seconds(n, k, kind.elem_bytes(), profile);
    report.config = None;
    report.finish(profile.peak_pim_ops);
}

/// Runs a baseline end to end; outputs equal the oracle whenever the layout fits.
pub fn simulate_baseline<T: Scalar>(
    kind: BaselineKind,
    a: &SparseMatrix<T>,
    f: &DenseMatrix<T>,
    topo: &PimTopology,
    profile: &CostProfile,
) -> Result<(DenseMatrix<T>, ExecutionReport)> {
    check_square(a)?;
    let (n, k) = (a.n_rows(), f.n_cols());
    if f.n_rows() != n {
        return Err(Error::DimensionMismatch {
            op: "simulate_baseline",
            expected: format!("{n} feature rows"),
            found: f.n_rows().to_string(),
        });
    }
    match kind {
        BaselineKind::Grande => {
            let csr = a.with_format(SparseFormat::Csr);
            let g = TileGeometry::new(n, k, topo.n_devices, 1);
            let offsets = slice_row_offsets(&csr, &g.slice_cols);
            let plan = grande_plan(&offsets, n, k, topo, T::KIND)?;
            validate_capacity(&plan, &plan.topology)?;
            let slices = slice_sparse(&csr, &plan.slice_cols);
            let out = execute(&plan, &slices, f, profile)?;
            Ok((out, simulate_cost(&plan, profile, kind.as_str())))
        }
        BaselineKind::Sp1 | BaselineKind::Sp2 => {
            let group = spmv_group(kind);
            let coo = a.with_format(SparseFormat::Coo);
            let offsets = slice_row_offsets(&coo, &[0..n]).remove(0);
            let slices = vec![coo];
            let mut out = DenseMatrix::zeros(n, k);
            let mut report = ExecutionReport::empty(kind.as_str(), None, k);
            for cols in spmv_rounds(topo.n_devices, group, k)? {
                let plan = spmv_round_plan(&offsets, n, cols.len(), group, topo, T::KIND)?;
                validate_capacity(&plan, &plan.topology)?;
                let part = execute(&plan, &slices, &f.block(0..n, cols.clone()), profile)?;
                for i in 0..n {
                    out.row_mut(i)[cols.clone()].copy_from_slice(part.row(i));
                }
                report.accumulate(&simulate_cost(&plan, profile, kind.as_str()));
            }
            finish_rounds(&mut report, n, k, T::KIND, profile);
            Ok((out, report))
        }
    }
}
