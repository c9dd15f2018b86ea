//! Synthetic per-source request streams: specs, generation, trace files,
//! stream statistics and the preset library.

pub mod generate;
pub mod presets;
pub mod stats;
pub mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sched::{SourceId, SourceKind};

pub use generate::TraceGenerator;
pub use presets::{IntensityClass, PresetLibrary};
pub use stats::{measure_stats, ServiceRecord, StreamStats};
pub use trace::{load_trace, parse_trace, save_trace, write_trace};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid source spec '{name}': {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("unsatisfiable {target} for '{name}': {reason}")]
    Unsatisfiable {
        name: String,
        target: &'static str,
        reason: String,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("stream statistics undefined: empty service log")]
    EmptyLog,
    #[error("preset library: {0}")]
    Preset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Statistical description of one request source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub name: String,
    #[serde(default)]
    pub source_id: SourceId,
    pub kind: SourceKind,
    /// Target requests per thousand cycles when running alone.
    pub intensity: f64,
    pub rbl_target: f64,
    pub blp_target: f64,
    #[serde(default)]
    pub write_fraction: f64,
    pub max_outstanding: usize,
    /// Distinct rows the stream may touch.
    pub footprint_rows: u32,
    /// Requests issued back to back with no compute in between. Defaults to
    /// the number of bank slots for CPUs and 64 for GPUs.
    #[serde(default)]
    pub burst: Option<u32>,
}

impl SourceSpec {
    pub fn validate(&self, banks_per_channel: u32) -> Result<(), WorkloadError> {
        let bad = |reason: String| WorkloadError::InvalidSpec {
            name: self.name.clone(),
            reason,
        };
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(bad(format!("intensity must be positive, got {}", self.intensity)));
        }
        if !(0.0..=1.0).contains(&self.rbl_target) {
            return Err(bad(format!("rbl_target must lie in [0, 1], got {}", self.rbl_target)));
        }
        if !(1.0..=banks_per_channel as f64).contains(&self.blp_target) {
            return Err(bad(format!(
                "blp_target must lie in [1, {banks_per_channel}], got {}",
                self.blp_target
            )));
        }
        if !(0.0..=1.0).contains(&self.write_fraction) {
            return Err(bad(format!("write_fraction must lie in [0, 1], got {}", self.write_fraction)));
        }
        if self.max_outstanding == 0 {
            return Err(bad("max_outstanding must be at least 1".into()));
        }
        if self.burst == Some(0) {
            return Err(bad("burst must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of banks the stream rotates over.
    pub fn bank_slots(&self) -> u32 {
        self.blp_target.ceil() as u32
    }

    /// Requests per back-to-back burst, capped by the window.
    pub fn burst_len(&self) -> u32 {
        let default = match self.kind {
            SourceKind::Cpu => self.bank_slots(),
            SourceKind::Gpu => 64,
        };
        self.burst.unwrap_or(default).min(self.max_outstanding as u32).max(1)
    }
}

/// One trace entry: `gap` is instructions (CPU) or idle cycles (GPU)
/// preceding the request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub source: SourceId,
    pub gap: u64,
    pub address: u64,
    pub is_write: bool,
}
