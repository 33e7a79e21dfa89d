//! Three-level work partitioning: clusters, cores, threads.

pub mod balance;
pub mod capacity;
pub mod geometry;
pub mod plan;
pub mod slice;

pub use balance::{assign_within_cluster, assign_within_core, SharedRow, Span, ThreadPlan};
pub use capacity::{validate_capacity, validate_feature_replica};
pub use geometry::{even_split, plan_tiles, TileGeometry};
pub use plan::{ClusterPlan, CorePlan, LoadedGraph, TilePlan};
pub use slice::{slice_row_offsets, slice_sparse};
