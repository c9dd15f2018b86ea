//! Cycle-level shared-DRAM simulator for integrated CPU-GPU systems.
//!
//! The crate models DRAM channels and their command timing ([`dram`]),
//! synthesizes per-source request streams ([`workload`]), schedules requests
//! with FR-FCFS, PAR-BS, ATLAS, TCM ([`sched`]) or the staged memory
//! scheduler ([`sms`]), runs simplified CPU/GPU cores against the memory
//! system ([`sim`]) and derives weighted speedup and maximum slowdown
//! ([`metrics`]). [`harness`] drives whole experiments and writes CSVs.

pub mod dram;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod sched;
pub mod sim;
pub mod sms;
pub mod workload;

pub use error::Error;
