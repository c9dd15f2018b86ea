use serde::Serialize;
use thiserror::Error;

use crate::dram::Cycle;
use crate::sched::{SourceId, SourceKind};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("missing alone run for source {0}")]
    MissingAloneRun(SourceId),
    #[error("alone run for source {0} does not match the shared run ({1})")]
    MismatchedAloneRun(SourceId, String),
    #[error("alone run for source {0} made no progress")]
    NoAloneProgress(SourceId),
}

/// Per-source outcome of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceRun {
    pub source: SourceId,
    pub kind: SourceKind,
    /// Instructions (CPU) or completed requests (GPU).
    pub retired: u64,
    /// Cycles until the source finished its trace, or the run length.
    pub active_cycles: Cycle,
    pub requests: u64,
    pub rbl: f64,
    pub blp: f64,
}

impl SourceRun {
    pub fn ipc(&self) -> f64 {
        if self.active_cycles == 0 {
            0.0
        } else {
            self.retired as f64 / self.active_cycles as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceMetrics {
    pub source: SourceId,
    pub kind: SourceKind,
    pub ipc_shared: f64,
    pub ipc_alone: f64,
    /// `ipc_alone / ipc_shared`.
    pub slowdown: f64,
    pub rbl: f64,
    pub blp: f64,
}

impl SourceMetrics {
    pub fn speedup(&self) -> f64 {
        self.ipc_shared / self.ipc_alone
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_source: Vec<SourceMetrics>,
    pub weighted_speedup: f64,
    pub max_slowdown: f64,
    pub cpu_weighted_speedup: f64,
    /// Mean shared/alone progress rate of the GPU sources, if any.
    pub gpu_speedup: Option<f64>,
    pub total_cycles: Cycle,
}

/// Combines a shared run with one alone run per source (indexed alike).
pub fn compute_report(shared: &[SourceRun], alone: &[SourceRun], total_cycles: Cycle) -> Result<MetricsReport, MetricsError> {
    let mut per_source = Vec::with_capacity(shared.len());
    for s in shared {
        let a = alone
            .iter()
            .find(|a| a.source == s.source)
            .ok_or(MetricsError::MissingAloneRun(s.source))?;
        if a.kind != s.kind {
            return Err(MetricsError::MismatchedAloneRun(s.source, format!("{} vs {}", a.kind, s.kind)));
        }
        let ipc_alone = a.ipc();
        if ipc_alone <= 0.0 {
            return Err(MetricsError::NoAloneProgress(s.source));
        }
        let ipc_shared = s.ipc();
        per_source.push(SourceMetrics {
            source: s.source,
            kind: s.kind,
            ipc_shared,
            ipc_alone,
            slowdown: ipc_alone / ipc_shared,
            rbl: s.rbl,
            blp: s.blp,
        });
    }
    let weighted_speedup = per_source.iter().map(SourceMetrics::speedup).sum();
    let max_slowdown = per_source.iter().map(|m| m.slowdown).fold(0.0, f64::max);
    let cpu_weighted_speedup = per_source
        .iter()
        .filter(|m| m.kind == SourceKind::Cpu)
        .map(SourceMetrics::speedup)
        .sum();
    let gpus: Vec<f64> = per_source
        .iter()
        .filter(|m| m.kind == SourceKind::Gpu)
        .map(SourceMetrics::speedup)
        .collect();
    let gpu_speedup = (!gpus.is_empty()).then(|| gpus.iter().sum::<f64>() / gpus.len() as f64);
    Ok(MetricsReport {
        per_source,
        weighted_speedup,
        max_slowdown,
        cpu_weighted_speedup,
        gpu_speedup,
        total_cycles,
    })
}
