//! Staged memory scheduler: per-source batch formation, a batch scheduler
//! that mixes shortest-job-first with round-robin, and per-bank FIFO command
//! scheduling.

pub mod batch;
pub mod batch_scheduler;
pub mod dcs;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dram::command::RequestId;
use crate::dram::{Channel, Cycle, DramCommand, IssueOutcome};
use crate::sched::{Admission, MemoryRequest, MemoryScheduler, SourceId};
use crate::workload::IntensityClass;

pub use batch::{Batch, FormationFifo};
pub use batch_scheduler::{BatchScheduler, DrainStep, PickPolicy, PickRecord};
pub use dcs::{Dcs, DcsFifo};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmsConfig {
    /// Probability of using SJF for a stage-2 pick.
    pub p: f64,
    pub formation_fifo_capacity: usize,
    /// Age threshold for the GPU and for sources without a class.
    pub age_threshold: Cycle,
    /// Age thresholds for CPU sources by intensity class.
    pub age_threshold_low: Cycle,
    pub age_threshold_medium: Cycle,
    pub age_threshold_high: Cycle,
    pub dcs_fifo_capacity: usize,
}

impl Default for SmsConfig {
    fn default() -> Self {
        Self {
            p: 0.9,
            formation_fifo_capacity: 10,
            age_threshold: 200,
            age_threshold_low: 0,
            age_threshold_medium: 0,
            age_threshold_high: 0,
            dcs_fifo_capacity: 15,
        }
    }
}

impl SmsConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(format!("sms.p must lie in [0, 1], got {}", self.p));
        }
        if self.formation_fifo_capacity == 0 || self.dcs_fifo_capacity == 0 {
            return Err("sms FIFO capacities must be at least 1".into());
        }
        Ok(())
    }

    pub fn threshold_for(&self, class: Option<IntensityClass>) -> Cycle {
        match class {
            Some(IntensityClass::Low) => self.age_threshold_low,
            Some(IntensityClass::Medium) => self.age_threshold_medium,
            Some(IntensityClass::High) => self.age_threshold_high,
            None => self.age_threshold,
        }
    }
}

/// Invariant counters collected when auditing is enabled.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SmsAudit {
    pub batches_checked: u64,
    pub homogeneity_violations: u64,
    pub contiguity_violations: u64,
    pub accounting_violations: u64,
}

/// One staged scheduler per memory controller.
pub struct SmsScheduler {
    config: SmsConfig,
    fifos: Vec<FormationFifo>,
    batch_scheduler: BatchScheduler,
    dcs: Dcs,
    issued: HashMap<RequestId, MemoryRequest>,
    in_flight: Vec<usize>,
    next_batch_id: u64,
    audit: Option<SmsAudit>,
}

impl SmsScheduler {
    pub fn new(config: SmsConfig, sources: usize, banks: u32, seed: u64) -> Self {
        Self::with_thresholds(config, &vec![config.age_threshold; sources], banks, seed)
    }

    /// One age threshold per source.
    pub fn with_thresholds(config: SmsConfig, thresholds: &[Cycle], banks: u32, seed: u64) -> Self {
        let sources = thresholds.len();
        Self {
            fifos: thresholds
                .iter()
                .enumerate()
                .map(|(s, &t)| FormationFifo::new(s as SourceId, config.formation_fifo_capacity, t))
                .collect(),
            batch_scheduler: BatchScheduler::new(config.p, seed),
            dcs: Dcs::new(banks, config.dcs_fifo_capacity),
            issued: HashMap::new(),
            in_flight: vec![0; sources],
            next_batch_id: 0,
            audit: None,
            config,
        }
    }

    pub fn config(&self) -> &SmsConfig {
        &self.config
    }

    pub fn enable_audit(&mut self) {
        self.audit.get_or_insert_with(SmsAudit::default);
    }

    pub fn audit(&self) -> Option<&SmsAudit> {
        self.audit.as_ref()
    }

    pub fn enable_pick_trace(&mut self) {
        self.batch_scheduler.enable_trace();
    }

    pub fn pick_trace(&self) -> &[PickRecord] {
        self.batch_scheduler.trace()
    }

    pub fn in_flight(&self) -> &[usize] {
        &self.in_flight
    }

    pub fn formation_fifos(&self) -> &[FormationFifo] {
        &self.fifos
    }

    pub fn dcs(&self) -> &Dcs {
        &self.dcs
    }

    fn run_audit(&mut self) {
        let Some(audit) = self.audit.as_mut() else { return };
        for f in self.dcs.fifos() {
            if !f.is_contiguous() {
                audit.contiguity_violations += 1;
            }
        }
        let mut counted = vec![0usize; self.in_flight.len()];
        for fifo in &self.fifos {
            counted[fifo.source as usize] += fifo.len();
        }
        for f in self.dcs.fifos() {
            for (r, _) in f.entries() {
                counted[r.source as usize] += 1;
            }
        }
        for r in self.issued.values() {
            counted[r.source as usize] += 1;
        }
        if counted != self.in_flight {
            audit.accounting_violations += 1;
        }
    }
}

impl MemoryScheduler for SmsScheduler {
    fn name(&self) -> &'static str {
        "sms"
    }

    fn admit(&mut self, req: MemoryRequest, _cycle: Cycle) -> Admission {
        let src = req.source as usize;
        let outcome = self.fifos[src].insert(req, &mut self.next_batch_id);
        if outcome.is_accepted() {
            self.in_flight[src] += 1;
        }
        outcome
    }

    fn tick(&mut self, cycle: Cycle) {
        for f in &mut self.fifos {
            f.tick(cycle);
        }
        if self.batch_scheduler.draining().is_some() {
            self.batch_scheduler.drain_step(&mut self.fifos, &mut self.dcs);
        }
        if self.batch_scheduler.draining().is_none() {
            if let Some(src) = self.batch_scheduler.pick(&self.fifos, &self.in_flight, cycle) {
                if let Some(audit) = self.audit.as_mut() {
                    let batch = self.fifos[src].front().expect("picked batch");
                    audit.batches_checked += 1;
                    if !batch.is_homogeneous() || batch.source as usize != src {
                        audit.homogeneity_violations += 1;
                    }
                }
            }
        }
        self.run_audit();
    }

    fn pick_command(&mut self, cycle: Cycle, channel: &Channel) -> Option<DramCommand> {
        self.dcs.pick(channel, cycle)
    }

    fn on_issue(&mut self, cmd: &DramCommand, outcome: &IssueOutcome, _cycle: Cycle) {
        if !cmd.kind.is_column() {
            return;
        }
        let mut req = self.dcs.fifo_mut(cmd.bank).pop().expect("column command for a FIFO head");
        debug_assert_eq!(Some(req.id), cmd.request);
        req.mark_issued(outcome);
        self.issued.insert(req.id, req);
    }

    fn complete(&mut self, id: RequestId, cycle: Cycle) -> Option<MemoryRequest> {
        let mut req = self.issued.remove(&id)?;
        req.mark_completed(cycle);
        self.in_flight[req.source as usize] -= 1;
        Some(req)
    }

    fn occupancy(&self) -> usize {
        self.fifos.iter().map(FormationFifo::len).sum::<usize>() + self.dcs.len() + self.issued.len()
    }
}
