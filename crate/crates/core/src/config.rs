use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SparseFormat;
use crate::topology::PimTopology;

/// Load-balance granularity chosen per level (`ver` / `edg`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BalanceMode {
    #[serde(rename = "ver")]
    Vertex,
    #[serde(rename = "edg")]
    Edge,
}

impl BalanceMode {
    pub const ALL: [BalanceMode; 2] = [BalanceMode::Vertex, BalanceMode::Edge];

    pub fn as_str(self) -> &'static str {
        match self {
            BalanceMode::Vertex => "ver",
            BalanceMode::Edge => "edg",
        }
    }
}

impl fmt::Display for BalanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BalanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ver" | "vertex" => Ok(BalanceMode::Vertex),
            "edg" | "edge" => Ok(BalanceMode::Edge),
            other => Err(format!("unknown balance mode '{other}' (expected ver|edg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyncMode {
    CoarseLock,
    LockFree,
}

impl fmt::Display for SyncMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyncMode::CoarseLock => "coarse-lock",
            SyncMode::LockFree => "lock-free",
        })
    }
}

impl FromStr for SyncMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coarse-lock" | "cg" => Ok(SyncMode::CoarseLock),
            "lock-free" | "lf" => Ok(SyncMode::LockFree),
            other => Err(format!("unknown sync mode '{other}'")),
        }
    }
}

/// Concrete partitioning rule for one level of the hierarchy.
///
/// * `Rv`: equal rows (CSR).
/// * `Re`: equal nonzeros at row granularity (CSR).
/// * `Ce`: equal nonzeros at row granularity (COO).
/// * `Cp`: equal nonzeros, rows may be split across neighbours (COO).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    Rv,
    Re,
    Ce,
    Cp,
}

impl Scheme {
    pub fn resolve(format: SparseFormat, mode: BalanceMode) -> Scheme {
        match (format, mode) {
            (SparseFormat::Csr, BalanceMode::Vertex) => Scheme::Rv,
            (SparseFormat::Csr, BalanceMode::Edge) => Scheme::Re,
            (SparseFormat::Coo, BalanceMode::Vertex) => Scheme::Ce,
            (SparseFormat::Coo, BalanceMode::Edge) => Scheme::Cp,
        }
    }

    pub fn check_format(self, format: SparseFormat) -> Result<()> {
        let ok = match self {
            Scheme::Rv | Scheme::Re => format == SparseFormat::Csr,
            Scheme::Ce | Scheme::Cp => format == SparseFormat::Coo,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SchemeFormat {
                scheme: self.to_string(),
                format: format.to_string(),
            })
        }
    }

    pub fn splits_rows(self) -> bool {
        self == Scheme::Cp
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Rv => "RV",
            Scheme::Re => "RE",
            Scheme::Ce => "CE",
            Scheme::Cp => "CP",
        })
    }
}

/// Full aggregation configuration: across-cluster partitioning plus the
/// balance mode used within clusters and within cores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PafConfig {
    pub sp: usize,
    pub dp: usize,
    pub grp: usize,
    pub format: SparseFormat,
    pub cluster_scheme: BalanceMode,
    pub core_scheme: BalanceMode,
    pub sync: SyncMode,
}

impl PafConfig {
    pub const GROUP_CHOICES: [usize; 3] = [1, 2, 4];

    pub fn cluster_rule(&self) -> Scheme {
        Scheme::resolve(self.format, self.cluster_scheme)
    }

    pub fn core_rule(&self) -> Scheme {
        Scheme::resolve(self.format, self.core_scheme)
    }

    /// Checks the geometric constraints against a machine and hidden size.
    pub fn validate(&self, topo: &PimTopology, n: usize, hidden: usize) -> Result<()> {
        if !Self::GROUP_CHOICES.contains(&self.grp) {
            return Err(Error::Geometry(format!(
                "clusters per device must be 1, 2 or 4, got {}",
                self.grp
            )));
        }
        check_geometry(self.sp, self.dp, topo.n_devices * self.grp, n, hidden)
    }
}

pub(crate) fn check_geometry(sp: usize, dp: usize, clusters: usize, n: usize, k: usize) -> Result<()> {
    if sp == 0 || dp == 0 {
        return Err(Error::Geometry("sp and dp must be at least 1".into()));
    }
    if sp * dp != clusters {
        return Err(Error::Geometry(format!(
            "sp x dp = {sp} x {dp} = {} but the machine has {clusters} clusters",
            sp * dp
        )));
    }
    if sp > n.max(1) {
        return Err(Error::Geometry(format!("sp = {sp} exceeds {n} vertices")));
    }
    if dp > k.max(1) {
        return Err(Error::Geometry(format!("dp = {dp} exceeds hidden size {k}")));
    }
    Ok(())
}

impl fmt::Display for PafConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}-{} {} {}/{} {}",
            self.sp, self.dp, self.grp, self.format, self.cluster_scheme, self.core_scheme, self.sync
        )
    }
}
