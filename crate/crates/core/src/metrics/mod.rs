//! Simplified CPU/GPU core models and the weighted-speedup / slowdown report.

pub mod core;
pub mod report;

pub use self::core::{CoreModel, StepOutcome};
pub use report::{compute_report, MetricsError, MetricsReport, SourceMetrics, SourceRun};
