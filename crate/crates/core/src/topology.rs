use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_THREADS_PER_CORE: usize = 24;

/// Static shape of the modeled near-bank machine.
///
/// A device groups `cores_per_device` cores; each core owns one DRAM bank
/// and one scratchpad. The cores of a device are carved into
/// `clusters_per_device` clusters of `cores_per_cluster` cores, and any
/// remainder sits idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PimTopology {
    pub n_devices: usize,
    pub cores_per_device: usize,
    pub clusters_per_device: usize,
    pub cores_per_cluster: usize,
    pub threads_per_core: usize,
    pub bank_capacity: usize,
    pub scratchpad_capacity: usize,
    pub transfer_chunk: usize,
    pub pipeline_saturation_threads: usize,
}

impl Default for PimTopology {
    fn default() -> Self {
        Self {
            n_devices: 32,
            cores_per_device: 64,
            clusters_per_device: 1,
            cores_per_cluster: 64,
            threads_per_core: 16,
            bank_capacity: 64 << 20,
            scratchpad_capacity: 64 << 10,
            transfer_chunk: 256,
            pipeline_saturation_threads: 16,
        }
    }
}

impl PimTopology {
    /// Default machine shape with `n_devices` devices of `cores_per_device` cores.
    pub fn new(n_devices: usize, cores_per_device: usize) -> Result<Self> {
        let topo = Self {
            n_devices,
            cores_per_device,
            cores_per_cluster: cores_per_device,
            ..Self::default()
        };
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_devices", self.n_devices),
            ("cores_per_device", self.cores_per_device),
            ("clusters_per_device", self.clusters_per_device),
            ("cores_per_cluster", self.cores_per_cluster),
            ("threads_per_core", self.threads_per_core),
            ("pipeline_saturation_threads", self.pipeline_saturation_threads),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Topology(format!("{name} must be at least 1")));
        }
        if self.threads_per_core > MAX_THREADS_PER_CORE {
            return Err(Error::ThreadCount {
                threads: self.threads_per_core,
                max: MAX_THREADS_PER_CORE,
            });
        }
        if !matches!(self.transfer_chunk, 128 | 256) {
            return Err(Error::Topology(format!(
                "transfer_chunk must be 128 or 256, got {}",
                self.transfer_chunk
            )));
        }
        if self.clusters_per_device * self.cores_per_cluster > self.cores_per_device {
            return Err(Error::Topology(format!(
                "{} clusters of {} cores do not fit a device of {} cores",
                self.clusters_per_device, self.cores_per_cluster, self.cores_per_device
            )));
        }
        Ok(())
    }

    /// Same machine with the device cores split evenly into `grp` clusters.
    pub fn regroup(&self, grp: usize) -> Result<Self> {
        if grp == 0 || grp > self.cores_per_device {
            return Err(Error::Topology(format!(
                "cannot form {grp} clusters from {} cores",
                self.cores_per_device
            )));
        }
        Ok(Self {
            clusters_per_device: grp,
            cores_per_cluster: self.cores_per_device / grp,
            ..*self
        })
    }

    pub fn total_clusters(&self) -> usize {
        self.n_devices * self.clusters_per_device
    }

    /// Cores that take part in a run (excludes the idle remainder).
    pub fn active_cores(&self) -> usize {
        self.total_clusters() * self.cores_per_cluster
    }

    pub fn idle_cores_per_device(&self) -> usize {
        self.cores_per_device - self.clusters_per_device * self.cores_per_cluster
    }
}
