use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::config::PafConfig;
use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::partition::capacity::validate_capacity;
use crate::partition::geometry::even_split;
use crate::partition::plan::TilePlan;
use crate::partition::slice::structure_row_offsets;
use crate::profile::{thread_scaling, CostProfile};
use crate::scalar::ValueKind;
use crate::sim::merge::merge_seconds;
use crate::sim::transfer::transfer_time;
use crate::topology::PimTopology;

/// Structure of a square graph plus cached per-slice row offsets.
#[derive(Debug)]
pub struct GraphStats {
    pub n: usize,
    pub nnz: usize,
    rowptr: Vec<usize>,
    colind: Vec<usize>,
    slices: Mutex<BTreeMap<usize, Arc<Vec<Vec<usize>>>>>,
}

impl GraphStats {
    pub fn new<T>(a: &SparseMatrix<T>) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::NotSquare {
                rows: a.n_rows(),
                cols: a.n_cols(),
            });
        }
        Ok(Self {
            n: a.n_rows(),
            nnz: a.nnz(),
            rowptr: a.rowptr().into_owned(),
            colind: a.colind().to_vec(),
            slices: Mutex::new(BTreeMap::new()),
        })
    }

    /// Row offsets of each of the `sp` column slices.
    pub fn slice_offsets(&self, sp: usize) -> Arc<Vec<Vec<usize>>> {
        let mut cache = self.slices.lock().expect("slice cache poisoned");
        cache
            .entry(sp)
            .or_insert_with(|| Arc::new(structure_row_offsets(&self.rowptr, &self.colind, &even_split(self.n, sp))))
            .clone()
    }
}

/// Predicted four-step breakdown of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerEstimate {
    pub config: PafConfig,
    pub t_host_pim: f64,
    pub t_kernel: f64,
    pub t_pim_host: f64,
    pub t_merge: f64,
    pub max_nnz_per_core: usize,
    pub max_bytes_to_core: usize,
    pub max_bytes_from_core: usize,
}

impl TunerEstimate {
    pub fn t_total(&self) -> f64 {
        self.t_host_pim + self.t_kernel + self.t_pim_host + self.t_merge
    }
}

/// Inputs of the analytical model, taken from a plan's assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanFigures {
    pub n: usize,
    pub sp: usize,
    pub dp: usize,
    pub tile_cols: usize,
    pub elem_bytes: usize,
    pub pcores: usize,
    pub threads: usize,
    pub max_nnz_per_core: usize,
    pub max_bytes_to_core: usize,
    pub max_bytes_from_core: usize,
}

impl PlanFigures {
    pub fn of(plan: &TilePlan) -> Self {
        Self {
            n: plan.n,
            sp: plan.config.sp,
            dp: plan.config.dp,
            tile_cols: plan.tile_cols.iter().map(|r| r.len()).max().unwrap_or(0),
            elem_bytes: plan.elem_bytes(),
            pcores: plan.active_cores(),
            threads: plan.topology.threads_per_core,
            max_nnz_per_core: plan.max_nnz_per_core(),
            max_bytes_to_core: plan.max_bytes_to_core(),
            max_bytes_from_core: plan.max_bytes_from_core(),
        }
    }
}

/// The four closed-form step times.
pub fn estimate(fig: &PlanFigures, cfg: PafConfig, profile: &CostProfile, topo: &PimTopology) -> TunerEstimate {
    let per_op = profile.per_op_cost(fig.tile_cols);
    TunerEstimate {
        config: cfg,
        t_host_pim: transfer_time(fig.pcores, fig.max_bytes_to_core, &profile.host_pim_bw),
        t_kernel: fig.max_nnz_per_core as f64 * per_op / thread_scaling(fig.threads, topo),
        t_pim_host: transfer_time(fig.pcores, fig.max_bytes_from_core, &profile.pim_host_bw),
        t_merge: merge_seconds(fig.n, fig.sp, fig.dp, fig.tile_cols, fig.elem_bytes, 0, profile).total(),
        max_nnz_per_core: fig.max_nnz_per_core,
        max_bytes_to_core: fig.max_bytes_to_core,
        max_bytes_from_core: fig.max_bytes_from_core,
    }
}

/// Plan of `cfg` built from cached offsets (no values are copied).
pub fn plan_for(stats: &GraphStats, hidden: usize, cfg: &PafConfig, topo: &PimTopology, kind: ValueKind) -> Result<TilePlan> {
    cfg.validate(topo, stats.n, hidden)?;
    let offsets = stats.slice_offsets(cfg.sp);
    TilePlan::from_offsets(&offsets, stats.n, hidden, cfg, topo, kind)
}

/// Predicted times for `cfg`; fails when the configuration is invalid or
/// does not fit the banks/scratchpads.
pub fn predict_time(
    stats: &GraphStats,
    hidden: usize,
    cfg: &PafConfig,
    profile: &CostProfile,
    topo: &PimTopology,
    kind: ValueKind,
) -> Result<TunerEstimate> {
    let plan = plan_for(stats, hidden, cfg, topo, kind)?;
    validate_capacity(&plan, &plan.topology)?;
    Ok(estimate(&PlanFigures::of(&plan), *cfg, profile, &plan.topology))
}
