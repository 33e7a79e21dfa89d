use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("scheme {scheme} cannot be used with {format} format")]
    SchemeFormat { scheme: String, format: String },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("thread count {threads} outside [1, {max}]")]
    ThreadCount { threads: usize, max: usize },

    #[error("scratchpad overflow on cluster {cluster} core {core}: {needed} B needed, {capacity} B available")]
    ScratchpadOverflow {
        cluster: usize,
        core: usize,
        needed: usize,
        capacity: usize,
    },

    #[error(transparent)]
    Capacity(#[from] CapacityError),

    #[error("no valid configuration: every dense partition count exceeds hidden size {hidden} ({n_devices} devices)")]
    NoValidConfig { hidden: usize, n_devices: usize },

    #[error("no feasible configuration among {candidates} candidates; first rejection: {first}")]
    NoFeasibleConfig { candidates: usize, first: String },

    #[error("invalid cost profile: {0}")]
    Profile(String),

    #[error("invalid tensor container: {0}")]
    Tensor(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Per-bank byte breakdown for a core whose footprint exceeds the bank.
#[derive(Error, Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapacityError {
    pub device: usize,
    pub cluster: usize,
    pub core: usize,
    pub adjacency_bytes: usize,
    pub feature_bytes: usize,
    pub output_bytes: usize,
    pub capacity: usize,
}

impl CapacityError {
    pub fn total(&self) -> usize {
        self.adjacency_bytes + self.feature_bytes + self.output_bytes
    }
}

impl fmt::Display for CapacityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bank capacity exceeded on device {} cluster {} core {}: adjacency {} B + features {} B + output {} B = {} B > {} B",
            self.device,
            self.cluster,
            self.core,
            self.adjacency_bytes,
            self.feature_bytes,
            self.output_bytes,
            self.total(),
            self.capacity
        )
    }
}
