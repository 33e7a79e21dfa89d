//! Planning, simulation and tuning of SpMM-based GNN aggregation on
//! near-bank processing-in-memory machines.

pub mod cli;
pub mod config;
pub mod error;
pub mod gnn;
pub mod matrix;
pub mod mtx;
pub mod normalize;
pub mod oracle;
pub mod partition;
pub mod profile;
pub mod scalar;
pub mod sim;
pub mod synth;
pub mod topology;
pub mod tuner;

pub use config::{BalanceMode, PafConfig, Scheme, SyncMode};
pub use error::{CapacityError, Error, Result};
pub use matrix::{DenseMatrix, SparseFormat, SparseMatrix};
pub use profile::{CostProfile, SizeTable};
pub use scalar::{Scalar, ValueKind};
pub use topology::PimTopology;
