//! Pluggable memory-scheduler interface, the shared request buffer and the
//! baseline policies (FR-FCFS, PAR-BS, ATLAS, TCM).

pub mod atlas;
pub mod buffer;
pub mod frfcfs;
pub mod parbs;
pub mod tcm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dram::command::RequestId;
use crate::dram::{Channel, Cycle, DramCommand, IssueOutcome, Location};

pub use atlas::{Atlas, AtlasConfig};
pub use buffer::{Admission, BufferEntry, RequestBuffer};
pub use frfcfs::{BufferedScheduler, FrFcfs, RankKey, RankPolicy};
pub use parbs::ParBs;
pub use tcm::{Tcm, TcmConfig};

pub type SourceId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Cpu,
    Gpu,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Cpu => "cpu",
            SourceKind::Gpu => "gpu",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RequestState {
    Waiting,
    Issued,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryRequest {
    pub id: RequestId,
    pub source: SourceId,
    pub kind: SourceKind,
    pub arrival: Cycle,
    pub loc: Location,
    pub is_write: bool,
    state: RequestState,
    completion: Option<Cycle>,
    row_hit: Option<bool>,
}

impl MemoryRequest {
    pub fn new(
        id: RequestId,
        source: SourceId,
        kind: SourceKind,
        arrival: Cycle,
        loc: Location,
        is_write: bool,
    ) -> Self {
        Self {
            id,
            source,
            kind,
            arrival,
            loc,
            is_write,
            state: RequestState::Waiting,
            completion: None,
            row_hit: None,
        }
    }

    pub fn state(&self) -> RequestState {
        self.state
    }

    pub fn completion(&self) -> Option<Cycle> {
        self.completion
    }

    /// Whether the column access found its row already open; known once issued.
    pub fn row_hit(&self) -> Option<bool> {
        self.row_hit
    }

    /// The column command that services this request.
    pub fn column_command(&self) -> DramCommand {
        DramCommand::column_access(self.is_write, self.loc.channel, self.loc.bank, self.loc.column)
            .for_request(self.id)
    }

    /// WAITING → ISSUED once its column command is on the bus.
    pub fn mark_issued(&mut self, outcome: &IssueOutcome) {
        assert_eq!(self.state, RequestState::Waiting, "request {} issued twice", self.id);
        self.state = RequestState::Issued;
        self.completion = outcome.completion;
        self.row_hit = Some(outcome.row_hit);
    }

    /// ISSUED → COMPLETED.
    pub fn mark_completed(&mut self, cycle: Cycle) {
        assert_eq!(self.state, RequestState::Issued, "request {} not in flight", self.id);
        debug_assert!(cycle >= self.arrival);
        self.state = RequestState::Completed;
        self.completion = Some(cycle);
    }
}

/// Next command a request needs given its bank's latched row.
pub fn next_command_for(req: &MemoryRequest, channel: &Channel) -> DramCommand {
    let loc = req.loc;
    match channel.bank(loc.bank).latched_row() {
        Some(r) if r == loc.row => req.column_command(),
        Some(_) => DramCommand::precharge(loc.channel, loc.bank).for_request(req.id),
        None => DramCommand::activate(loc.channel, loc.bank, loc.row).for_request(req.id),
    }
}

/// Per-channel scheduler instance.
///
/// The simulation loop calls, each cycle and in this order: [`admit`] for
/// new arrivals, [`tick`], [`pick_command`] and, when a command was picked
/// and issued, [`on_issue`]. Completed data bursts are reported through
/// [`complete`] at the start of the cycle they finish.
///
/// [`admit`]: MemoryScheduler::admit
/// [`tick`]: MemoryScheduler::tick
/// [`pick_command`]: MemoryScheduler::pick_command
/// [`on_issue`]: MemoryScheduler::on_issue
/// [`complete`]: MemoryScheduler::complete
pub trait MemoryScheduler: Send {
    fn name(&self) -> &'static str;

    fn admit(&mut self, req: MemoryRequest, cycle: Cycle) -> Admission;

    /// Per-cycle bookkeeping (quantum boundaries, staged movement).
    fn tick(&mut self, _cycle: Cycle) {}

    /// At most one command for this channel; must pass `channel.can_issue`.
    fn pick_command(&mut self, cycle: Cycle, channel: &Channel) -> Option<DramCommand>;

    fn on_issue(&mut self, cmd: &DramCommand, outcome: &IssueOutcome, cycle: Cycle);

    /// Retires an in-flight request whose data burst finished at `cycle`.
    fn complete(&mut self, id: RequestId, cycle: Cycle) -> Option<MemoryRequest>;

    /// Requests held by this controller (waiting or in flight).
    fn occupancy(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Frfcfs,
    Parbs,
    Atlas,
    Tcm,
    Sms,
}

impl SchedulerKind {
    /// Legend order used in reports.
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::Frfcfs,
        SchedulerKind::Parbs,
        SchedulerKind::Atlas,
        SchedulerKind::Tcm,
        SchedulerKind::Sms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Frfcfs => "frfcfs",
            SchedulerKind::Parbs => "parbs",
            SchedulerKind::Atlas => "atlas",
            SchedulerKind::Tcm => "tcm",
            SchedulerKind::Sms => "sms",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown scheduler '{s}' (expected frfcfs|parbs|atlas|tcm|sms)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheduler_names_round_trip() {
        for k in SchedulerKind::ALL {
            assert_eq!(k.as_str().parse::<SchedulerKind>().unwrap(), k);
        }
        assert!("fifo".parse::<SchedulerKind>().is_err());
    }

    #[test]
    fn request_state_advances_monotonically() {
        let loc = Location { channel: 0, bank: 1, row: 2, column: 3 };
        let mut r = MemoryRequest::new(7, 0, SourceKind::Cpu, 10, loc, false);
        assert_eq!(r.state(), RequestState::Waiting);
        r.mark_issued(&IssueOutcome { completion: Some(30), row_hit: true });
        assert_eq!(r.state(), RequestState::Issued);
        r.mark_completed(30);
        assert_eq!(r.state(), RequestState::Completed);
        assert_eq!(r.completion(), Some(30));
    }

    #[test]
    #[should_panic]
    fn completing_a_waiting_request_panics() {
        let loc = Location { channel: 0, bank: 0, row: 0, column: 0 };
        MemoryRequest::new(1, 0, SourceKind::Cpu, 0, loc, false).mark_completed(5);
    }
}
