use serde::{Deserialize, Serialize};

use crate::config::{BalanceMode, PafConfig, SyncMode};
use crate::error::{Error, Result};
use crate::matrix::{SparseFormat, SparseMatrix};
use crate::profile::CostProfile;
use crate::scalar::ValueKind;
use crate::topology::PimTopology;
use crate::tuner::predict::{predict_time, GraphStats, TunerEstimate};

pub const TUNE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub config: PafConfig,
    pub estimate: Option<TunerEstimate>,
    pub t_total: Option<f64>,
    /// Why the configuration cannot run (bank or scratchpad overflow, too many slices).
    pub rejected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub schema_version: u32,
    pub config: PafConfig,
    pub estimate: TunerEstimate,
    pub candidates: Vec<Candidate>,
}

impl TuneOutcome {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Configurations in search order: slices over divisors of the device count,
/// clusters per device over 1, 2, 4, then the cluster and core balance modes;
/// `dp > hidden` is skipped.
pub fn candidate_configs(n_devices: usize, hidden: usize, format: SparseFormat) -> Vec<PafConfig> {
    let mut out = Vec::new();
    for sp in divisors(n_devices) {
        for grp in PafConfig::GROUP_CHOICES {
            let dp = n_devices / sp * grp;
            if dp > hidden {
                continue;
            }
            for cluster_scheme in BalanceMode::ALL {
                for core_scheme in BalanceMode::ALL {
                    out.push(PafConfig {
                        sp,
                        dp,
                        grp,
                        format,
                        cluster_scheme,
                        core_scheme,
                        sync: SyncMode::LockFree,
                    });
                }
            }
        }
    }
    out
}

/// Scores every candidate and keeps the first one with the strictly smallest
/// predicted time.
pub fn tune_stats(
    stats: &GraphStats,
    hidden: usize,
    topo: &PimTopology,
    profile: &CostProfile,
    format: SparseFormat,
    kind: ValueKind,
) -> Result<TuneOutcome> {
    topo.validate()?;
    let configs = candidate_configs(topo.n_devices, hidden, format);
    if configs.is_empty() {
        return Err(Error::NoValidConfig {
            hidden,
            n_devices: topo.n_devices,
        });
    }
    let mut candidates = Vec::with_capacity(configs.len());
    let mut best: Option<(f64, TunerEstimate)> = None;
    for cfg in configs {
        match predict_time(stats, hidden, &cfg, profile, topo, kind) {
            Ok(e) => {
                let t = e.t_total();
                if best.as_ref().is_none_or(|(bt, _)| t < *bt) {
                    best = Some((t, e));
                }
                candidates.push(Candidate {
                    config: cfg,
                    estimate: Some(e),
                    t_total: Some(t),
                    rejected: None,
                });
            }
            Err(err) => candidates.push(Candidate {
                config: cfg,
                estimate: None,
                t_total: None,
                rejected: Some(err.to_string()),
            }),
        }
    }
    match best {
        Some((_, estimate)) => Ok(TuneOutcome {
            schema_version: TUNE_SCHEMA_VERSION,
            config: estimate.config,
            estimate,
            candidates,
        }),
        None => Err(Error::NoFeasibleConfig {
            candidates: candidates.len(),
            first: candidates[0].rejected.clone().unwrap_or_default(),
        }),
    }
}

pub fn tune_with_candidates<T>(
    graph: &SparseMatrix<T>,
    hidden: usize,
    topo: &PimTopology,
    profile: &CostProfile,
    format: SparseFormat,
    kind: ValueKind,
) -> Result<TuneOutcome> {
    tune_stats(&GraphStats::new(graph)?, hidden, topo, profile, format, kind)
}

/// Best configuration for aggregating `graph` at width `hidden`.
pub fn tune<T: crate::scalar::Scalar>(
    graph: &SparseMatrix<T>,
    hidden: usize,
    topo: &PimTopology,
    profile: &CostProfile,
    format: SparseFormat,
) -> Result<PafConfig> {
    Ok(tune_with_candidates(graph, hidden, topo, profile, format, T::KIND)?.config)
}
