use std::collections::VecDeque;

use super::{BankState, BankStatus, CommandKind, Cycle, DramCommand, DramError, DramTimingParams};

/// Result of a successfully issued command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IssueOutcome {
    /// Cycle at which the data burst finishes (READ/WRITE only).
    pub completion: Option<Cycle>,
    /// For column commands: whether the access found its row already
    /// serving column commands (i.e. it was not the first access after
    /// the ACTIVATE).
    pub row_hit: bool,
}

/// One channel (single rank): its banks, the shared command bus and the
/// data-bus reservation schedule.
#[derive(Debug, Clone)]
pub struct Channel {
    pub id: u32,
    params: DramTimingParams,
    banks: Vec<BankState>,
    /// Most recent four ACTIVATE cycles, ascending.
    activate_history: VecDeque<Cycle>,
    last_column: Option<Cycle>,
    last_write: Option<Cycle>,
    last_command: Option<Cycle>,
    /// Reserved data bursts `[start, end)`.
    bursts: VecDeque<(Cycle, Cycle)>,
}

impl Channel {
    pub fn new(id: u32, params: DramTimingParams) -> Self {
        Self {
            id,
            params,
            banks: vec![BankState::default(); params.banks_per_channel as usize],
            activate_history: VecDeque::with_capacity(4),
            last_column: None,
            last_write: None,
            last_command: None,
            bursts: VecDeque::new(),
        }
    }

    pub fn params(&self) -> &DramTimingParams {
        &self.params
    }

    pub fn bank(&self, bank: u32) -> &BankState {
        &self.banks[bank as usize]
    }

    pub fn banks(&self) -> &[BankState] {
        &self.banks
    }

    pub fn activate_history(&self) -> impl Iterator<Item = Cycle> + '_ {
        self.activate_history.iter().copied()
    }

    pub fn status(&self, bank: u32, now: Cycle) -> BankStatus {
        self.banks[bank as usize].status(now, &self.params)
    }

    pub fn can_issue(&self, cmd: &DramCommand, now: Cycle) -> bool {
        self.check(cmd, now).is_ok()
    }

    /// Checks every timing and state rule for `cmd` at `now`, returning the
    /// first one that fails.
    pub fn check(&self, cmd: &DramCommand, now: Cycle) -> Result<(), &'static str> {
        let p = &self.params;
        if !cmd.is_well_formed() {
            return Err("malformed command");
        }
        if cmd.channel != self.id || cmd.bank >= p.banks_per_channel {
            return Err("wrong channel or bank");
        }
        if self.last_command.is_some_and(|t| t >= now) {
            return Err("command bus busy");
        }
        let bank = &self.banks[cmd.bank as usize];
        let since = |t: Option<Cycle>, gap: u32| t.is_none_or(|t| now >= t + gap as u64);
        match cmd.kind {
            CommandKind::Activate => {
                if bank.status(now, p) != BankStatus::Closed {
                    return Err("bank not closed (tRP)");
                }
                if !since(bank.last_activate, p.t_rc) {
                    return Err("tRC");
                }
                if !since(self.activate_history.back().copied(), p.t_rrd) {
                    return Err("tRRD");
                }
                let in_window = self
                    .activate_history
                    .iter()
                    .filter(|&&t| t + p.t_faw as u64 > now)
                    .count();
                if in_window >= 4 {
                    return Err("tFAW");
                }
            }
            CommandKind::Precharge => {
                if bank.latched_row().is_none() {
                    return Err("bank not open");
                }
                if !since(bank.last_activate, p.t_ras) {
                    return Err("tRAS");
                }
                if !since(bank.last_read, p.t_rtp) {
                    return Err("tRTP");
                }
            }
            CommandKind::Read | CommandKind::Write => {
                if bank.status(now, p) != BankStatus::Open {
                    return Err("bank not open (tRCD)");
                }
                if !since(self.last_column, p.t_ccd) {
                    return Err("tCCD");
                }
                let latency = if cmd.kind == CommandKind::Read {
                    if !since(self.last_write, p.t_wtr) {
                        return Err("tWTR");
                    }
                    p.t_cl
                } else {
                    p.t_cwl
                };
                let start = now + latency as u64;
                let end = start + p.burst_cycles as u64;
                if self.bursts.iter().any(|&(s, e)| start < e && s < end) {
                    return Err("data bus");
                }
            }
        }
        Ok(())
    }

    /// Executes `cmd`, updating bank and bus state. Issuing a command that
    /// does not pass [`Channel::check`] is a scheduler bug and is reported
    /// as a protocol violation.
    pub fn issue(&mut self, cmd: &DramCommand, now: Cycle) -> Result<IssueOutcome, DramError> {
        if let Err(reason) = self.check(cmd, now) {
            return Err(DramError::ProtocolViolation {
                cycle: now,
                command: cmd.to_string(),
                reason: reason.to_string(),
            });
        }
        let p = self.params;
        self.last_command = Some(now);
        while self.bursts.front().is_some_and(|&(_, e)| e <= now) {
            self.bursts.pop_front();
        }
        let bank = &mut self.banks[cmd.bank as usize];
        let mut outcome = IssueOutcome {
            completion: None,
            row_hit: false,
        };
        match cmd.kind {
            CommandKind::Activate => {
                bank.activate(cmd.row.expect("well-formed ACT"), now);
                if self.activate_history.len() == 4 {
                    self.activate_history.pop_front();
                }
                self.activate_history.push_back(now);
            }
            CommandKind::Precharge => bank.precharge(now),
            CommandKind::Read | CommandKind::Write => {
                let latency = if cmd.kind == CommandKind::Read {
                    bank.last_read = Some(now);
                    p.t_cl
                } else {
                    bank.last_write = Some(now);
                    self.last_write = Some(now);
                    p.t_cwl
                };
                outcome.row_hit = bank.columns_since_activate > 0;
                bank.columns_since_activate += 1;
                self.last_column = Some(now);
                let start = now + latency as u64;
                let end = start + p.burst_cycles as u64;
                let pos = self.bursts.partition_point(|&(s, _)| s < start);
                self.bursts.insert(pos, (start, end));
                outcome.completion = Some(end);
            }
        }
        Ok(outcome)
    }
}
