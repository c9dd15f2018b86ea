use super::buffer::{Admission, BufferEntry, RequestBuffer};
use super::{next_command_for, MemoryRequest, MemoryScheduler};
use crate::dram::command::RequestId;
use crate::dram::{Channel, Cycle, DramCommand, IssueOutcome};

/// Source/request priority class; lower values are served first.
pub type RankKey = u64;

/// Full ordering key of a buffered request: rank, then row hits before
/// misses, then age.
type PickKey = (RankKey, u8, Cycle, RequestId);

/// The policy-specific part of a centralized-buffer scheduler. Within equal
/// rank keys the FR-FCFS rules apply.
pub trait RankPolicy: Send {
    fn name(&self) -> &'static str;

    fn quantum(&self) -> Option<Cycle> {
        None
    }

    fn on_quantum_boundary(&mut self, _cycle: Cycle) {}

    fn on_arrival(&mut self, _req: &MemoryRequest, _cycle: Cycle) {}

    /// Called every cycle before picking.
    fn prepare(&mut self, _cycle: Cycle, _buffer: &mut RequestBuffer) {}

    fn rank(&self, entry: &BufferEntry) -> RankKey;

    fn on_issue(
        &mut self,
        _entry: &BufferEntry,
        _cmd: &DramCommand,
        _channel_params: &crate::dram::DramTimingParams,
        _cycle: Cycle,
    ) {
    }

    fn on_completion(&mut self, _req: &MemoryRequest, _cycle: Cycle) {}
}

/// First-ready, first-come-first-serve.
#[derive(Debug, Default, Clone)]
pub struct FrFcfs;

impl RankPolicy for FrFcfs {
    fn name(&self) -> &'static str {
        "frfcfs"
    }

    fn rank(&self, _entry: &BufferEntry) -> RankKey {
        0
    }
}

/// Column-read, column-write and row-miss candidates for one bank.
#[derive(Clone, Copy, Default)]
struct BankCandidates {
    slots: [Option<(PickKey, usize)>; 3],
}

/// A scheduler built around a [`RequestBuffer`]: each cycle it issues the
/// highest-priority request whose next command is legal.
///
/// A PRECHARGE is never issued while a request that outranks the one
/// needing it still hits the bank's row.
pub struct BufferedScheduler<R: RankPolicy> {
    buffer: RequestBuffer,
    policy: R,
    params: crate::dram::DramTimingParams,
    scratch: Vec<BankCandidates>,
    candidates: Vec<(PickKey, usize)>,
}

impl<R: RankPolicy> BufferedScheduler<R> {
    pub fn new(policy: R, buffer: RequestBuffer, params: crate::dram::DramTimingParams) -> Self {
        Self {
            buffer,
            policy,
            params,
            scratch: vec![BankCandidates::default(); params.banks_per_channel as usize],
            candidates: Vec::with_capacity(3 * params.banks_per_channel as usize),
        }
    }

    pub fn policy(&self) -> &R {
        &self.policy
    }

    pub fn buffer(&self) -> &RequestBuffer {
        &self.buffer
    }
}

impl<R: RankPolicy> MemoryScheduler for BufferedScheduler<R> {
    fn name(&self) -> &'static str {
        self.policy.name()
    }

    fn admit(&mut self, req: MemoryRequest, cycle: Cycle) -> Admission {
        if !self.buffer.has_room_for(req.kind) {
            return Admission::Stalled(req);
        }
        self.policy.on_arrival(&req, cycle);
        self.buffer.admit(req)
    }

    fn tick(&mut self, cycle: Cycle) {
        if let Some(q) = self.policy.quantum() {
            if cycle > 0 && cycle % q == 0 {
                self.policy.on_quantum_boundary(cycle);
            }
        }
        self.policy.prepare(cycle, &mut self.buffer);
    }

    fn pick_command(&mut self, cycle: Cycle, channel: &Channel) -> Option<DramCommand> {
        if self.buffer.waiting().is_empty() {
            return None;
        }
        self.scratch.fill(BankCandidates::default());
        for (i, entry) in self.buffer.waiting().iter().enumerate() {
            let req = &entry.req;
            let hit = channel.bank(req.loc.bank).latched_row() == Some(req.loc.row);
            let slot = match (hit, req.is_write) {
                (true, false) => 0,
                (true, true) => 1,
                (false, _) => 2,
            };
            let key = (self.policy.rank(entry), u8::from(!hit), req.arrival, req.id);
            let best = &mut self.scratch[req.loc.bank as usize].slots[slot];
            if best.is_none_or(|(k, _)| key < k) {
                *best = Some((key, i));
            }
        }
        self.candidates.clear();
        for bank in &self.scratch {
            let best_hit = match (bank.slots[0], bank.slots[1]) {
                (Some(a), Some(b)) => Some(a.0.min(b.0)),
                (a, b) => a.or(b).map(|x| x.0),
            };
            for (slot, cand) in bank.slots.iter().enumerate() {
                if let Some((key, idx)) = *cand {
                    if slot == 2 && best_hit.is_some_and(|h| h < key) {
                        continue;
                    }
                    self.candidates.push((key, idx));
                }
            }
        }
        self.candidates.sort_unstable();
        let waiting = self.buffer.waiting();
        self.candidates.iter().find_map(|&(_, idx)| {
            let cmd = next_command_for(&waiting[idx].req, channel);
            channel.can_issue(&cmd, cycle).then_some(cmd)
        })
    }

    fn on_issue(&mut self, cmd: &DramCommand, outcome: &IssueOutcome, cycle: Cycle) {
        let Some(id) = cmd.request else { return };
        if cmd.kind.is_column() {
            if let Some(entry) = self.buffer.mark_issued(id, outcome) {
                self.policy.on_issue(&entry, cmd, &self.params, cycle);
            }
        } else if let Some(entry) = self.buffer.find_waiting(id) {
            let entry = entry.clone();
            self.policy.on_issue(&entry, cmd, &self.params, cycle);
        }
    }

    fn complete(&mut self, id: RequestId, cycle: Cycle) -> Option<MemoryRequest> {
        let req = self.buffer.complete(id, cycle)?;
        self.policy.on_completion(&req, cycle);
        Some(req)
    }

    fn occupancy(&self) -> usize {
        self.buffer.occupancy()
    }
}
