//! Calibrated machine characteristics consumed by the simulator and tuner.
//!
//! Units:
//! * bandwidth tables: GB/s (1e9 bytes/s), keyed by bytes per transfer;
//! * `fma_core`: nonzeros processed per second by one core thread, keyed by
//!   the feature chunk width (elements multiplied per nonzero);
//! * `add_host`: elements accumulated per second on the host, keyed by block
//!   width in elements.
//!
//! The per-core kernel term is `nnz * per_op_cost` with
//! `per_op_cost = 1 / throughput`, i.e. throughputs are turned into a time
//! per nonzero before multiplying.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::PimTopology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeTable {
    /// `(size, value)` pairs with strictly increasing sizes.
    pub points: Vec<(f64, f64)>,
}

impl SizeTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let t = Self { points };
        t.validate("table")?;
        Ok(t)
    }

    pub fn constant(keys: &[f64], value: f64) -> Self {
        Self {
            points: keys.iter().map(|&k| (k, value)).collect(),
        }
    }

    pub fn from_fn(keys: &[f64], f: impl Fn(f64) -> f64) -> Self {
        Self {
            points: keys.iter().map(|&k| (k, f(k))).collect(),
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Profile(format!("{name} is empty")));
        }
        if self.points.iter().any(|&(k, v)| !(k > 0.0) || !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Profile(format!("{name} has non-positive keys or values")));
        }
        if self.points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Profile(format!("{name} keys are not strictly increasing")));
        }
        Ok(())
    }

    /// Value at the key nearest to `size` in log2 space; ties go to the
    /// smaller key and sizes outside the table clamp to its ends.
    pub fn closest(&self, size: f64) -> f64 {
        let size = size.max(f64::MIN_POSITIVE);
        let i = self.points.partition_point(|&(k, _)| k < size);
        if i == 0 {
            return self.points[0].1;
        }
        if i == self.points.len() {
            return self.points[i - 1].1;
        }
        let (lo, lo_v) = self.points[i - 1];
        let (hi, hi_v) = self.points[i];
        let d_lo = size.log2() - lo.log2();
        let d_hi = hi.log2() - size.log2();
        if d_hi < d_lo {
            hi_v
        } else {
            lo_v
        }
    }

    pub fn keys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }
}

pub fn closest_lookup(table: &SizeTable, size: f64) -> f64 {
    table.closest(size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub host_pim_bw: SizeTable,
    pub pim_host_bw: SizeTable,
    pub host_bw: SizeTable,
    pub fma_core: SizeTable,
    pub add_host: SizeTable,
    /// Dense GEMM throughput of the host in flop/s (combination step).
    pub host_gemm_flops: f64,
    /// Peak PIM integer throughput used for utilization figures (ops/s).
    pub peak_pim_ops: f64,
}

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi / lo).log2() / (count - 1) as f64;
    (0..count).map(|i| lo * (i as f64 * step).exp2()).collect()
}

impl CostProfile {
    /// Profile shaped after a 350 MHz near-bank machine with int32 data:
    /// transfer bandwidth grows with per-bank payload, each nonzero costs a
    /// fixed fetch/index overhead plus a per-element multiply-add.
    pub fn upmem_like() -> Self {
        let bank_sizes = geometric(4096.0, 64.0 * 1048576.0, 29);
        let host_sizes = geometric(4.0, 8192.0, 12);
        let chunks = geometric(1.0, 1024.0, 11);
        // one thread issues 1/16 of the pipeline: 350e6 / 16 instructions/s
        let thread_ips = 350e6 / 16.0;
        let (per_nnz, per_elem) = (24.0, 12.0);
        Self {
            host_pim_bw: SizeTable::from_fn(&bank_sizes, |m| 6.7 * m / (m + 96.0 * 1024.0)),
            pim_host_bw: SizeTable::from_fn(&bank_sizes, |m| 4.7 * m / (m + 128.0 * 1024.0)),
            host_bw: SizeTable::from_fn(&host_sizes, |m| 12.0 * m / (m + 64.0)),
            fma_core: SizeTable::from_fn(&chunks, |c| thread_ips / (per_nnz + per_elem * c)),
            add_host: SizeTable::from_fn(&chunks, |b| 4e9 * b / (b + 16.0)),
            host_gemm_flops: 200e9,
            peak_pim_ops: 115.93e9,
        }
    }

    /// Every table flat at the given value.
    pub fn constant(bw_gbs: f64, host_bw_gbs: f64, fma: f64, add: f64) -> Self {
        let k = [1.0];
        Self {
            host_pim_bw: SizeTable::constant(&k, bw_gbs),
            pim_host_bw: SizeTable::constant(&k, bw_gbs),
            host_bw: SizeTable::constant(&k, host_bw_gbs),
            fma_core: SizeTable::constant(&k, fma),
            add_host: SizeTable::constant(&k, add),
            host_gemm_flops: 1e9,
            peak_pim_ops: 1e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.host_pim_bw.validate("host_pim_bw")?;
        self.pim_host_bw.validate("pim_host_bw")?;
        self.host_bw.validate("host_bw")?;
        self.fma_core.validate("fma_core")?;
        self.add_host.validate("add_host")?;
        if !(self.host_gemm_flops > 0.0) || !(self.peak_pim_ops > 0.0) {
            return Err(Error::Profile("host_gemm_flops and peak_pim_ops must be positive".into()));
        }
        Ok(())
    }

    /// Seconds per nonzero on one thread for a feature chunk of `chunk` elements.
    pub fn per_op_cost(&self, chunk: usize) -> f64 {
        1.0 / self.fma_core.closest(chunk as f64)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl Default for CostProfile {
    fn default() -> Self {
        Self::upmem_like()
    }
}

/// Speedup of `threads` threads over one: linear until the pipeline
/// saturates, flat afterwards.
pub fn thread_scaling(threads: usize, topo: &PimTopology) -> f64 {
    threads.min(topo.pipeline_saturation_threads).max(1) as f64
}

/// `bytes / (gbs * 1e9)`.
pub fn transfer_seconds(bytes: f64, gbs: f64) -> f64 {
    bytes / (gbs * 1e9)
}
