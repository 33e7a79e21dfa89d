use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::PafConfig;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreReport {
    pub id: usize,
    pub nnz: usize,
    pub rows: usize,
    pub t_kernel: f64,
    pub bytes_to: usize,
    pub bytes_from: usize,
    pub padding_to: usize,
    pub padding_from: usize,
    pub lock_writes: usize,
    pub partial_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub index: usize,
    pub device: usize,
    pub nnz: usize,
    pub t_kernel: f64,
    pub bytes_to: usize,
    pub bytes_from: usize,
    pub cores: Vec<CoreReport>,
}

/// Cost breakdown of one aggregation (or of several, when accumulated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub schema_version: u32,
    pub scheme: String,
    pub config: Option<PafConfig>,
    pub t_host_pim: f64,
    pub t_kernel: f64,
    pub t_pim_host: f64,
    pub t_merge: f64,
    pub t_other: f64,
    pub t_total: f64,
    pub bytes_to_pim: u64,
    pub bytes_from_pim: u64,
    pub padding_bytes: u64,
    pub padding_to_pim: u64,
    pub padding_from_pim: u64,
    pub max_nnz_per_core: usize,
    pub max_bytes_to_core: usize,
    pub max_bytes_from_core: usize,
    pub active_cores: usize,
    pub idle_cores: usize,
    pub edges: u64,
    pub hidden: usize,
    pub utilization_pct: f64,
    pub clusters: Vec<ClusterReport>,
}

impl ExecutionReport {
    pub fn empty(scheme: &str, config: Option<PafConfig>, hidden: usize) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            scheme: scheme.to_string(),
            config,
            t_host_pim: 0.0,
            t_kernel: 0.0,
            t_pim_host: 0.0,
            t_merge: 0.0,
            t_other: 0.0,
            t_total: 0.0,
            bytes_to_pim: 0,
            bytes_from_pim: 0,
            padding_bytes: 0,
            padding_to_pim: 0,
            padding_from_pim: 0,
            max_nnz_per_core: 0,
            max_bytes_to_core: 0,
            max_bytes_from_core: 0,
            active_cores: 0,
            idle_cores: 0,
            edges: 0,
            hidden,
            utilization_pct: 0.0,
            clusters: Vec::new(),
        }
    }

    /// Sum of the five steps, always evaluated in the same order.
    pub fn component_sum(&self) -> f64 {
        self.t_host_pim + self.t_kernel + self.t_pim_host + self.t_merge + self.t_other
    }

    pub(crate) fn finish(&mut self, peak_ops: f64) {
        self.t_total = self.component_sum();
        self.padding_bytes = self.padding_to_pim + self.padding_from_pim;
        self.utilization_pct =
            resource_utilization(self, self.edges, self.hidden, peak_ops).unwrap_or(0.0);
    }

    /// Folds a sequentially executed run (e.g. another SpMV round) into `self`.
    pub(crate) fn accumulate(&mut self, other: &ExecutionReport) {
        self.t_host_pim += other.t_host_pim;
        self.t_kernel += other.t_kernel;
        self.t_pim_host += other.t_pim_host;
        self.t_merge += other.t_merge;
        self.t_other += other.t_other;
        self.bytes_to_pim += other.bytes_to_pim;
        self.bytes_from_pim += other.bytes_from_pim;
        self.padding_to_pim += other.padding_to_pim;
        self.padding_from_pim += other.padding_from_pim;
        self.max_nnz_per_core = self.max_nnz_per_core.max(other.max_nnz_per_core);
        self.max_bytes_to_core = self.max_bytes_to_core.max(other.max_bytes_to_core);
        self.max_bytes_from_core = self.max_bytes_from_core.max(other.max_bytes_from_core);
        self.active_cores = self.active_cores.max(other.active_cores);
        self.idle_cores = self.idle_cores.max(other.idle_cores);
        self.edges += other.edges;
        self.clusters.extend(other.clusters.iter().cloned());
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fixed-column CSV: one row per step, then one row per cluster.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        self.write_csv_rows(&mut w, &self.scheme)?;
        w.flush().map_err(Error::Io)?;
        Ok(())
    }

    pub(crate) fn write_csv_rows<W: Write>(&self, w: &mut csv::Writer<W>, label: &str) -> Result<()> {
        let steps = [
            ("host_pim", self.t_host_pim, self.bytes_to_pim, self.padding_to_pim),
            ("kernel", self.t_kernel, 0, 0),
            ("pim_host", self.t_pim_host, self.bytes_from_pim, self.padding_from_pim),
            ("merge", self.t_merge, 0, 0),
            ("other", self.t_other, 0, 0),
            ("total", self.t_total, self.bytes_to_pim + self.bytes_from_pim, self.padding_bytes),
        ];
        for (step, t, bytes, pad) in steps {
            w.write_record([
                label.to_string(),
                "step".to_string(),
                String::new(),
                step.to_string(),
                format!("{t:e}"),
                bytes.to_string(),
                pad.to_string(),
            ])?;
        }
        for c in &self.clusters {
            w.write_record([
                label.to_string(),
                "cluster".to_string(),
                c.index.to_string(),
                "kernel".to_string(),
                format!("{:e}", c.t_kernel),
                (c.bytes_to + c.bytes_from).to_string(),
                String::new(),
            ])?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 7] = ["scheme", "scope", "id", "step", "seconds", "bytes", "padding_bytes"];

/// Achieved operations (`edges * hidden`) per second as a percentage of `peak_ops`.
pub fn resource_utilization(report: &ExecutionReport, edges: u64, k: usize, peak_ops: f64) -> Result<f64> {
    if !(report.t_total > 0.0) {
        return Err(Error::Geometry("utilization needs a positive execution time".into()));
    }
    let ops = edges as f64 * k as f64;
    Ok(100.0 * (ops / report.t_total) / peak_ops)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_time(t: f64) -> ExecutionReport {
        let mut r = ExecutionReport::empty("x", None, 256);
        r.t_kernel = t;
        r.t_total = t;
        r
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(resource_utilization(&with_time(1.0), 100, 256, 25600.0).unwrap(), 100.0);
        assert_eq!(resource_utilization(&with_time(2.0), 100, 256, 25600.0).unwrap(), 50.0);
        assert!(resource_utilization(&with_time(0.0), 100, 256, 25600.0).is_err());
    }

    #[test]
    fn csv_columns() {
        let mut r = with_time(1.0);
        r.finish(1e9);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "scheme,scope,id,step,seconds,bytes,padding_bytes");
        assert_eq!(text.lines().count(), 7);
        assert!(text.contains("x,step,,kernel,1e0,0,0"));
    }
}
