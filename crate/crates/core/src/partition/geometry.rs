use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::{check_geometry, PafConfig};
use crate::error::Result;
use crate::topology::PimTopology;

/// Splits `0..n` into `parts` contiguous ranges whose sizes differ by at most
/// one; the first `n % parts` ranges take the extra element.
pub fn even_split(n: usize, parts: usize) -> Vec<Range<usize>> {
    assert!(parts > 0, "even_split needs at least one part");
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for i in 0..parts {
        let len = base + usize::from(i < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Across-cluster tiling: `sp` column slices of the adjacency matrix paired
/// with `sp` row blocks of the feature matrix, times `dp` feature column blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGeometry {
    pub n: usize,
    pub k: usize,
    pub sp: usize,
    pub dp: usize,
    pub slice_cols: Vec<Range<usize>>,
    pub tile_cols: Vec<Range<usize>>,
}

impl TileGeometry {
    pub fn new(n: usize, k: usize, sp: usize, dp: usize) -> Self {
        Self {
            n,
            k,
            sp,
            dp,
            slice_cols: even_split(n, sp),
            tile_cols: even_split(k, dp),
        }
    }

    /// Tile `(i, j)` runs on cluster `i * dp + j`.
    pub fn cluster_index(&self, slice: usize, col_group: usize) -> usize {
        slice * self.dp + col_group
    }

    /// `(feature rows, feature cols)` of the tile handled by `cluster`.
    pub fn feature_tile(&self, cluster: usize) -> (Range<usize>, Range<usize>) {
        let (i, j) = (cluster / self.dp, cluster % self.dp);
        (self.slice_cols[i].clone(), self.tile_cols[j].clone())
    }

    pub fn n_clusters(&self) -> usize {
        self.sp * self.dp
    }
}

pub fn plan_tiles(n: usize, k: usize, cfg: &PafConfig, topo: &PimTopology) -> Result<TileGeometry> {
    check_geometry(cfg.sp, cfg.dp, topo.n_devices * cfg.grp, n, k)?;
    Ok(TileGeometry::new(n, k, cfg.sp, cfg.dp))
}
