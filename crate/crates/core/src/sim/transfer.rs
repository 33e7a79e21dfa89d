//! Host<->bank transfers with per-device zero padding.
//!
//! A parallel transfer requires equal payloads on every bank of a device, so
//! each bank is padded to its device's largest payload. Time follows
//! `PCores * max_bytes_per_core / bw(closest(max_bytes_per_core))`.

use std::collections::BTreeMap;

use crate::partition::plan::TilePlan;
use crate::profile::{transfer_seconds, CostProfile, SizeTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankPayload {
    pub device: usize,
    pub core: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferCost {
    /// `(core id, padding bytes)` in payload order.
    pub padding_per_core: Vec<(usize, usize)>,
    /// Bytes moved including padding.
    pub bytes: u64,
    pub padding: u64,
    pub max_bytes: usize,
    pub seconds: f64,
}

pub fn transfer_time(pcores: usize, max_bytes: usize, table: &SizeTable) -> f64 {
    if max_bytes == 0 {
        return 0.0;
    }
    let bw = table.closest(max_bytes as f64);
    transfer_seconds(pcores as f64 * max_bytes as f64, bw)
}

pub fn padded_transfer(payloads: &[BankPayload], table: &SizeTable) -> TransferCost {
    let mut device_max: BTreeMap<usize, usize> = BTreeMap::new();
    for p in payloads {
        let m = device_max.entry(p.device).or_insert(0);
        *m = (*m).max(p.bytes);
    }
    let mut bytes = 0u64;
    let mut padding = 0u64;
    let padding_per_core = payloads
        .iter()
        .map(|p| {
            let pad = device_max[&p.device] - p.bytes;
            bytes += (p.bytes + pad) as u64;
            padding += pad as u64;
            (p.core, pad)
        })
        .collect();
    let max_bytes = device_max.values().copied().max().unwrap_or(0);
    TransferCost {
        padding_per_core,
        bytes,
        padding,
        max_bytes,
        seconds: transfer_time(payloads.len(), max_bytes, table),
    }
}

/// Feature tiles into every active bank.
pub fn host_pim_transfer(plan: &TilePlan, profile: &CostProfile) -> TransferCost {
    let payloads: Vec<BankPayload> = plan
        .cores()
        .map(|(cl, c)| BankPayload {
            device: cl.device,
            core: c.id,
            bytes: c.feature_bytes,
        })
        .collect();
    padded_transfer(&payloads, &profile.host_pim_bw)
}

/// Output partials back to the host; a split row counts on every owner.
pub fn pim_host_transfer(plan: &TilePlan, profile: &CostProfile) -> TransferCost {
    let payloads: Vec<BankPayload> = plan
        .cores()
        .map(|(cl, c)| BankPayload {
            device: cl.device,
            core: c.id,
            bytes: c.output_bytes,
        })
        .collect();
    padded_transfer(&payloads, &profile.pim_host_bw)
}
