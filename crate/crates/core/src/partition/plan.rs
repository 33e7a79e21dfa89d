use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::{PafConfig, Scheme, SyncMode};
use crate::error::{Error, Result};
use crate::matrix::{SparseFormat, SparseMatrix};
use crate::partition::balance::{assign_within_cluster, assign_within_core, SharedRow, Span, ThreadPlan};
use crate::partition::geometry::{plan_tiles, TileGeometry};
use crate::partition::slice::{slice_row_offsets, slice_sparse};
use crate::scalar::{Scalar, ValueKind};
use crate::topology::PimTopology;

/// Bytes used for one stored row/column index in a bank.
pub const INDEX_BYTES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorePlan {
    /// Global core id: `device * cores_per_device + position in device`.
    pub id: usize,
    pub span: Span,
    pub threads: ThreadPlan,
    pub adjacency_bytes: usize,
    pub feature_bytes: usize,
    pub output_bytes: usize,
}

impl CorePlan {
    pub fn bank_bytes(&self) -> usize {
        self.adjacency_bytes + self.feature_bytes + self.output_bytes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPlan {
    pub index: usize,
    pub device: usize,
    pub slice: usize,
    pub col_group: usize,
    pub feature_rows: Range<usize>,
    pub feature_cols: Range<usize>,
    /// Nonzeros of the slice handled by this cluster.
    pub span: Span,
    pub cores: Vec<CorePlan>,
    /// Output rows split between cores of this cluster (merged on the host).
    pub shared_rows: Vec<SharedRow>,
}

impl ClusterPlan {
    pub fn tile_cols(&self) -> usize {
        self.feature_cols.len()
    }
}

/// Materialized assignment of slices and feature tiles to clusters, cores
/// and threads, with per-bank byte accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilePlan {
    pub n: usize,
    pub k: usize,
    pub config: PafConfig,
    pub topology: PimTopology,
    pub value_kind: ValueKind,
    pub cluster_rule: Scheme,
    pub core_rule: Scheme,
    pub slice_cols: Vec<Range<usize>>,
    pub tile_cols: Vec<Range<usize>>,
    pub clusters: Vec<ClusterPlan>,
}

/// Everything needed to build one cluster's share of a plan.
pub(crate) struct ClusterSpec<'a> {
    pub index: usize,
    pub device: usize,
    pub slice: usize,
    pub col_group: usize,
    pub offsets: &'a [usize],
    pub span: Span,
    pub feature_rows: Range<usize>,
    pub feature_cols: Range<usize>,
    pub first_core: usize,
}

pub(crate) struct Rules {
    pub format: SparseFormat,
    pub cluster: Scheme,
    pub core: Scheme,
    pub sync: SyncMode,
    pub elem_bytes: usize,
}

pub(crate) fn adjacency_bytes(format: SparseFormat, rows: usize, nnz: usize, elem_bytes: usize) -> usize {
    match format {
        SparseFormat::Csr => (rows + 1) * INDEX_BYTES + nnz * (INDEX_BYTES + elem_bytes),
        SparseFormat::Coo => nnz * (2 * INDEX_BYTES + elem_bytes),
    }
}

pub(crate) fn build_cluster(spec: ClusterSpec<'_>, rules: &Rules, topo: &PimTopology) -> Result<ClusterPlan> {
    let (spans, shared) =
        assign_within_cluster(spec.offsets, &spec.span, topo.cores_per_cluster, rules.cluster)?;
    let tile_cols = spec.feature_cols.len();
    let e = rules.elem_bytes;
    let cores = spans
        .into_iter()
        .enumerate()
        .map(|(c, span)| {
            let threads = assign_within_core(
                spec.offsets,
                &span,
                topo.threads_per_core,
                rules.core,
                rules.sync,
                tile_cols,
                e,
                topo,
            )
            .map_err(|err| match err {
                Error::ScratchpadOverflow { needed, capacity, .. } => Error::ScratchpadOverflow {
                    cluster: spec.index,
                    core: c,
                    needed,
                    capacity,
                },
                other => other,
            })?;
            Ok(CorePlan {
                id: spec.first_core + c,
                adjacency_bytes: adjacency_bytes(rules.format, span.rows.len(), span.nnz(), e),
                feature_bytes: spec.feature_rows.len() * tile_cols * e,
                output_bytes: span.rows.len() * tile_cols * e,
                span,
                threads,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterPlan {
        index: spec.index,
        device: spec.device,
        slice: spec.slice,
        col_group: spec.col_group,
        feature_rows: spec.feature_rows,
        feature_cols: spec.feature_cols,
        span: spec.span,
        cores,
        shared_rows: shared,
    })
}

impl TilePlan {
    /// Builds a plan from per-slice row offsets (see [`slice_row_offsets`]).
    ///
    /// `topo` is regrouped to `cfg.grp` clusters per device.
    pub fn from_offsets(
        offsets: &[Vec<usize>],
        n: usize,
        k: usize,
        cfg: &PafConfig,
        topo: &PimTopology,
        kind: ValueKind,
    ) -> Result<Self> {
        let topo = topo.regroup(cfg.grp)?;
        topo.validate()?;
        let geometry = plan_tiles(n, k, cfg, &topo)?;
        if offsets.len() != cfg.sp {
            return Err(Error::Geometry(format!(
                "{} slice offset tables for sp = {}",
                offsets.len(),
                cfg.sp
            )));
        }
        let rules = Rules {
            format: cfg.format,
            cluster: cfg.cluster_rule(),
            core: cfg.core_rule(),
            sync: cfg.sync,
            elem_bytes: kind.elem_bytes(),
        };
        Self::assemble(geometry, offsets, cfg, &topo, kind, &rules)
    }

    pub(crate) fn assemble(
        g: TileGeometry,
        offsets: &[Vec<usize>],
        cfg: &PafConfig,
        topo: &PimTopology,
        kind: ValueKind,
        rules: &Rules,
    ) -> Result<Self> {
        rules.cluster.check_format(rules.format)?;
        rules.core.check_format(rules.format)?;
        let mut clusters = Vec::with_capacity(g.n_clusters());
        // clusters reading the same slice get identical core assignments
        let mut template: Option<ClusterPlan> = None;
        for idx in 0..g.n_clusters() {
            let (slice, col_group) = (idx / g.dp, idx % g.dp);
            let (feature_rows, feature_cols) = g.feature_tile(idx);
            let device = idx / topo.clusters_per_device;
            let first_core = device * topo.cores_per_device
                + (idx % topo.clusters_per_device) * topo.cores_per_cluster;
            let reusable = template.as_ref().filter(|t| {
                t.slice == slice && t.feature_cols.len() == feature_cols.len()
            });
            let cluster = match reusable {
                Some(t) => {
                    let mut c = t.clone();
                    c.index = idx;
                    c.device = device;
                    c.col_group = col_group;
                    c.feature_cols = feature_cols;
                    for (i, core) in c.cores.iter_mut().enumerate() {
                        core.id = first_core + i;
                    }
                    c
                }
                None => build_cluster(
                    ClusterSpec {
                        index: idx,
                        device,
                        slice,
                        col_group,
                        offsets: &offsets[slice],
                        span: Span::whole(&offsets[slice]),
                        feature_rows,
                        feature_cols,
                        first_core,
                    },
                    rules,
                    topo,
                )?,
            };
            template = Some(cluster.clone());
            clusters.push(cluster);
        }
        Ok(Self {
            n: g.n,
            k: g.k,
            config: *cfg,
            topology: *topo,
            value_kind: kind,
            cluster_rule: rules.cluster,
            core_rule: rules.core,
            slice_cols: g.slice_cols,
            tile_cols: g.tile_cols,
            clusters,
        })
    }

    pub fn elem_bytes(&self) -> usize {
        self.value_kind.elem_bytes()
    }

    pub fn cores(&self) -> impl Iterator<Item = (&ClusterPlan, &CorePlan)> {
        self.clusters
            .iter()
            .flat_map(|cl| cl.cores.iter().map(move |c| (cl, c)))
    }

    pub fn total_nnz(&self) -> usize {
        self.cores().map(|(_, c)| c.span.nnz()).sum()
    }

    pub fn max_nnz_per_core(&self) -> usize {
        self.cores().map(|(_, c)| c.span.nnz()).max().unwrap_or(0)
    }

    pub fn max_bytes_to_core(&self) -> usize {
        self.cores().map(|(_, c)| c.feature_bytes).max().unwrap_or(0)
    }

    pub fn max_bytes_from_core(&self) -> usize {
        self.cores().map(|(_, c)| c.output_bytes).max().unwrap_or(0)
    }

    /// Cores taking part in transfers and kernels.
    pub fn active_cores(&self) -> usize {
        self.clusters.iter().map(|c| c.cores.len()).sum()
    }

    pub fn n_devices(&self) -> usize {
        self.clusters.iter().map(|c| c.device + 1).max().unwrap_or(0)
    }

    /// Idle cores per device of the machine this plan runs on.
    pub fn idle_cores(&self) -> usize {
        let per_device = self.topology.cores_per_device;
        self.n_devices() * per_device - self.active_cores()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Graph data resident in the banks together with its plan.
#[derive(Debug, Clone)]
pub struct LoadedGraph<T> {
    pub plan: TilePlan,
    pub slices: Vec<SparseMatrix<T>>,
}

impl<T: Scalar> LoadedGraph<T> {
    /// Slices `a` (already normalized) and plans it for `cfg`.
    pub fn load(a: &SparseMatrix<T>, k: usize, cfg: &PafConfig, topo: &PimTopology) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::NotSquare {
                rows: a.n_rows(),
                cols: a.n_cols(),
            });
        }
        let a = a.with_format(cfg.format);
        let g = TileGeometry::new(a.n_cols(), k, cfg.sp, cfg.dp);
        let offsets = slice_row_offsets(&a, &g.slice_cols);
        let plan = TilePlan::from_offsets(&offsets, a.n_rows(), k, cfg, topo, T::KIND)?;
        let slices = slice_sparse(&a, &plan.slice_cols);
        Ok(Self { plan, slices })
    }

    pub fn n(&self) -> usize {
        self.plan.n
    }

    /// Plan for the resident slices at another hidden size, same configuration.
    pub fn plan_for_hidden(&self, k: usize) -> Result<TilePlan> {
        if k == self.plan.k {
            return Ok(self.plan.clone());
        }
        let offsets: Vec<Vec<usize>> = self.slices.iter().map(|s| s.rowptr().into_owned()).collect();
        TilePlan::from_offsets(&offsets, self.plan.n, k, &self.plan.config, &self.plan.topology, T::KIND)
    }
}
