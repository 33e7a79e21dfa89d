//! Microbenchmark grids and profile calibration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{thread_scaling, transfer_seconds, CostProfile, SizeTable};
use crate::sim::kernel::core_kernel_seconds;
use crate::sim::transfer::transfer_time;
use crate::topology::PimTopology;

const KIB: f64 = 1024.0;
const MIB: f64 = 1024.0 * 1024.0;

/// Sizes at which each microbenchmark family is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    /// Bytes per bank.
    pub host_pim: Vec<f64>,
    pub pim_host: Vec<f64>,
    /// Bytes per copied row.
    pub host_bw: Vec<f64>,
    /// Feature elements per nonzero.
    pub fma_chunks: Vec<f64>,
    /// Elements per reduced block row.
    pub add_blocks: Vec<f64>,
}

/// `count` points from `lo` to `hi` (both included) with a constant ratio,
/// rounded to whole units.
pub fn geometric_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi / lo).log2() / (count - 1) as f64;
    (0..count).map(|i| (lo * (i as f64 * step).exp2()).round()).collect()
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            host_pim: geometric_points(64.0 * KIB, 8.0 * MIB, 16),
            pim_host: geometric_points(64.0 * KIB, 8.0 * MIB, 16),
            host_bw: geometric_points(8.0, 2.0 * KIB, 9),
            fma_chunks: geometric_points(2.0, 512.0, 9),
            add_blocks: geometric_points(2.0, 512.0, 9),
        }
    }
}

impl CalibrationGrid {
    pub fn validate(&self) -> Result<()> {
        for (name, pts) in [
            ("host_pim", &self.host_pim),
            ("pim_host", &self.pim_host),
            ("host_bw", &self.host_bw),
            ("fma_chunks", &self.fma_chunks),
            ("add_blocks", &self.add_blocks),
        ] {
            if pts.is_empty() || pts.iter().any(|&p| !(p >= 1.0)) {
                return Err(Error::Profile(format!("grid {name} needs sizes >= 1")));
            }
            if pts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Profile(format!("grid {name} is not strictly increasing")));
            }
        }
        Ok(())
    }
}

/// Timed measurements a calibration run needs from a machine.
pub trait Microbenchmarks {
    /// Seconds to send `bytes` to every bank of the machine in one parallel transfer.
    fn host_pim_seconds(&self, bytes_per_bank: usize) -> f64;
    fn pim_host_seconds(&self, bytes_per_bank: usize) -> f64;
    /// Seconds for a host 2D block copy of `total_bytes` in rows of `row_bytes`.
    fn host_copy_seconds(&self, total_bytes: usize, row_bytes: usize) -> f64;
    /// Seconds for one core running `threads` threads over `nnz` nonzeros of `chunk` elements.
    fn kernel_seconds(&self, nnz: usize, chunk: usize, threads: usize) -> f64;
    /// Seconds for the host to add `elems` elements in blocks of `block`.
    fn host_add_seconds(&self, elems: usize, block: usize) -> f64;
    fn host_gemm_flops(&self) -> f64;
    fn peak_pim_ops(&self) -> f64;
    fn topology(&self) -> &PimTopology;
}

/// The analytical machine model with a ground-truth profile.
#[derive(Debug, Clone)]
pub struct SimulatedMachine {
    pub topology: PimTopology,
    pub ground: CostProfile,
}

impl Microbenchmarks for SimulatedMachine {
    fn host_pim_seconds(&self, bytes_per_bank: usize) -> f64 {
        transfer_time(self.topology.n_devices * self.topology.cores_per_device, bytes_per_bank, &self.ground.host_pim_bw)
    }

    fn pim_host_seconds(&self, bytes_per_bank: usize) -> f64 {
        transfer_time(self.topology.n_devices * self.topology.cores_per_device, bytes_per_bank, &self.ground.pim_host_bw)
    }

    fn host_copy_seconds(&self, total_bytes: usize, row_bytes: usize) -> f64 {
        transfer_seconds(total_bytes as f64, self.ground.host_bw.closest(row_bytes as f64))
    }

    fn kernel_seconds(&self, nnz: usize, chunk: usize, threads: usize) -> f64 {
        core_kernel_seconds(nnz, threads, 0, chunk, &self.ground, &self.topology)
    }

    fn host_add_seconds(&self, elems: usize, block: usize) -> f64 {
        elems as f64 / self.ground.add_host.closest(block as f64)
    }

    fn host_gemm_flops(&self) -> f64 {
        self.ground.host_gemm_flops
    }

    fn peak_pim_ops(&self) -> f64 {
        self.ground.peak_pim_ops
    }

    fn topology(&self) -> &PimTopology {
        &self.topology
    }
}

const KERNEL_NNZ: usize = 1 << 16;
const HOST_ELEMS: usize = 1 << 20;

/// Samples every microbenchmark family at every grid point.
///
/// The FMA benchmark runs with all hardware threads and the thread speedup is
/// divided out, so `fma_core` is a single-thread throughput like the ground
/// profile's.
pub fn calibrate(bench: &impl Microbenchmarks, grid: &CalibrationGrid) -> Result<CostProfile> {
    grid.validate()?;
    let topo = bench.topology();
    topo.validate()?;
    let banks = (topo.n_devices * topo.cores_per_device) as f64;
    let table = |keys: &[f64], f: &dyn Fn(f64) -> f64| SizeTable::from_fn(keys, f);
    let threads = topo.threads_per_core;
    let profile = CostProfile {
        host_pim_bw: table(&grid.host_pim, &|m| banks * m / bench.host_pim_seconds(m as usize) / 1e9),
        pim_host_bw: table(&grid.pim_host, &|m| banks * m / bench.pim_host_seconds(m as usize) / 1e9),
        host_bw: table(&grid.host_bw, &|r| {
            let rows = HOST_ELEMS / r as usize;
            (rows as f64 * r) / bench.host_copy_seconds(rows * r as usize, r as usize) / 1e9
        }),
        fma_core: table(&grid.fma_chunks, &|c| {
            KERNEL_NNZ as f64 / bench.kernel_seconds(KERNEL_NNZ, c as usize, threads) / thread_scaling(threads, topo)
        }),
        add_host: table(&grid.add_blocks, &|b| HOST_ELEMS as f64 / bench.host_add_seconds(HOST_ELEMS, b as usize)),
        host_gemm_flops: bench.host_gemm_flops(),
        peak_pim_ops: bench.peak_pim_ops(),
    };
    profile.validate()?;
    Ok(profile)
}
