//! After-the-fact protocol checker.
//!
//! Rules are re-derived directly from the command log (pairwise distances to
//! earlier commands on the same channel plus a replayed open-row table); no
//! state from [`super::Channel`] is consulted.

use std::collections::HashMap;
use std::fmt;

use super::{CommandKind, CommandRecord, Cycle, DramTimingParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Position of the offending command in the log.
    pub index: usize,
    pub record: CommandRecord,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} [{}] violates {}", self.index, self.record, self.rule)
    }
}

#[derive(Debug, Clone, Default)]
struct ChannelLog {
    history: Vec<CommandRecord>,
    open_rows: HashMap<u32, u32>,
    /// Data bursts `[start, end)` that may still overlap future ones.
    live_bursts: Vec<(Cycle, Cycle)>,
}

/// Incremental validator: feed commands in log order.
#[derive(Debug, Clone)]
pub struct Validator {
    params: DramTimingParams,
    lookback: Cycle,
    channels: HashMap<u32, ChannelLog>,
    count: usize,
    violations: Vec<Violation>,
}

impl Validator {
    pub fn new(params: DramTimingParams) -> Self {
        let lookback = params.max_constraint_span();
        Self {
            params,
            lookback,
            channels: HashMap::new(),
            count: 0,
            violations: Vec::new(),
        }
    }

    /// Rules `rec` would break if appended now. Does not modify the log.
    pub fn check(&self, rec: &CommandRecord) -> Vec<&'static str> {
        let p = &self.params;
        let cmd = &rec.command;
        let mut broken = Vec::new();
        let empty = ChannelLog::default();
        let log = self.channels.get(&cmd.channel).unwrap_or(&empty);

        if !cmd.is_well_formed() {
            broken.push("well-formed command");
        }
        if cmd.bank >= p.banks_per_channel {
            broken.push("bank index in range");
        }
        // state replay
        let open = log.open_rows.get(&cmd.bank);
        match cmd.kind {
            CommandKind::Activate if open.is_some() => broken.push("ACT to a closed bank"),
            CommandKind::Precharge if open.is_none() => broken.push("PRE to an open bank"),
            CommandKind::Read | CommandKind::Write if open.is_none() => {
                broken.push("column access to an open bank")
            }
            _ => {}
        }

        let mut recent_acts = 0;
        for prev in log.history.iter().rev() {
            if prev.cycle > rec.cycle {
                broken.push("cycle order");
                break;
            }
            let d = rec.cycle - prev.cycle;
            if d > self.lookback {
                break;
            }
            let pk = prev.command.kind;
            let same_bank = prev.command.bank == cmd.bank;
            if d == 0 {
                broken.push("one command per channel per cycle");
            }
            let short = |gap: u32| d < gap as Cycle;
            if pk == CommandKind::Activate && d < p.t_faw as Cycle {
                recent_acts += 1;
            }
            match cmd.kind {
                CommandKind::Activate => {
                    if same_bank && pk == CommandKind::Precharge && short(p.t_rp) {
                        broken.push("tRP");
                    }
                    if same_bank && pk == CommandKind::Activate && short(p.t_rc) {
                        broken.push("tRC");
                    }
                    if pk == CommandKind::Activate && short(p.t_rrd) {
                        broken.push("tRRD");
                    }
                }
                CommandKind::Precharge => {
                    if same_bank && pk == CommandKind::Activate && short(p.t_ras) {
                        broken.push("tRAS");
                    }
                    if same_bank && pk == CommandKind::Read && short(p.t_rtp) {
                        broken.push("tRTP");
                    }
                }
                CommandKind::Read | CommandKind::Write => {
                    if same_bank && pk == CommandKind::Activate && short(p.t_rcd) {
                        broken.push("tRCD");
                    }
                    if pk.is_column() && short(p.t_ccd) {
                        broken.push("tCCD");
                    }
                    if cmd.kind == CommandKind::Read && pk == CommandKind::Write && short(p.t_wtr) {
                        broken.push("tWTR");
                    }
                }
            }
        }
        if cmd.kind == CommandKind::Activate && recent_acts >= 4 {
            broken.push("tFAW");
        }
        if let Some((s, e)) = burst_of(rec, p) {
            if log.live_bursts.iter().any(|&(s2, e2)| s < e2 && s2 < e) {
                broken.push("data bus exclusivity");
            }
        }
        broken.sort_unstable();
        broken.dedup();
        broken
    }

    /// Appends `rec`, recording any violations. Returns how many rules it broke.
    pub fn push(&mut self, rec: CommandRecord) -> usize {
        let broken = self.check(&rec);
        let index = self.count;
        self.count += 1;
        for rule in &broken {
            self.violations.push(Violation {
                index,
                record: rec,
                rule: rule.to_string(),
            });
        }
        let burst = burst_of(&rec, &self.params);
        let log = self.channels.entry(rec.command.channel).or_default();
        match rec.command.kind {
            CommandKind::Activate => {
                log.open_rows.insert(rec.command.bank, rec.command.row.unwrap_or(0));
            }
            CommandKind::Precharge => {
                log.open_rows.remove(&rec.command.bank);
            }
            _ => {}
        }
        log.live_bursts.retain(|&(_, e)| e > rec.cycle);
        if let Some(b) = burst {
            log.live_bursts.push(b);
        }
        log.history.push(rec);
        broken.len()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn into_violations(self) -> Vec<Violation> {
        self.violations
    }
}

fn burst_of(rec: &CommandRecord, p: &DramTimingParams) -> Option<(Cycle, Cycle)> {
    let lat = match rec.command.kind {
        CommandKind::Read => p.t_cl,
        CommandKind::Write => p.t_cwl,
        _ => return None,
    } as Cycle;
    let start = rec.cycle + lat;
    Some((start, start + p.burst_cycles as Cycle))
}

/// Validates a whole command log.
pub fn validate_log(log: &[CommandRecord], params: &DramTimingParams) -> Vec<Violation> {
    let mut v = Validator::new(*params);
    for rec in log {
        v.push(*rec);
    }
    v.into_violations()
}

/// Pairs of overlapping data bursts on any channel, found by sorting all
/// bursts by start time.
pub fn overlapping_bursts(log: &[CommandRecord], params: &DramTimingParams) -> usize {
    let mut per_channel: HashMap<u32, Vec<(Cycle, Cycle)>> = HashMap::new();
    for rec in log {
        if let Some(b) = burst_of(rec, params) {
            per_channel.entry(rec.command.channel).or_default().push(b);
        }
    }
    per_channel
        .into_values()
        .map(|mut bursts| {
            bursts.sort_unstable();
            bursts.windows(2).filter(|w| w[1].0 < w[0].1).count()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::DramCommand;

    fn rec(cycle: Cycle, command: DramCommand) -> CommandRecord {
        CommandRecord { cycle, command }
    }

    #[test]
    fn clean_sequence_passes() {
        let p = DramTimingParams::default();
        let log = vec![
            rec(0, DramCommand::activate(0, 0, 5)),
            rec(11, DramCommand::read(0, 0, 0)),
            rec(15, DramCommand::read(0, 0, 1)),
            rec(28, DramCommand::precharge(0, 0)),
            rec(39, DramCommand::activate(0, 0, 6)),
        ];
        assert!(validate_log(&log, &p).is_empty());
        assert_eq!(overlapping_bursts(&log, &p), 0);
    }

    #[test]
    fn flags_each_timing_rule() {
        let p = DramTimingParams::default();
        let cases: Vec<(Vec<CommandRecord>, &str)> = vec![
            (
                vec![rec(0, DramCommand::activate(0, 0, 1)), rec(10, DramCommand::read(0, 0, 0))],
                "tRCD",
            ),
            (
                vec![rec(0, DramCommand::activate(0, 0, 1)), rec(27, DramCommand::precharge(0, 0))],
                "tRAS",
            ),
            (
                vec![
                    rec(0, DramCommand::activate(0, 0, 1)),
                    rec(28, DramCommand::precharge(0, 0)),
                    rec(38, DramCommand::activate(0, 0, 2)),
                ],
                "tRP",
            ),
            (
                vec![rec(0, DramCommand::activate(0, 0, 1)), rec(4, DramCommand::activate(0, 1, 1))],
                "tRRD",
            ),
            (
                vec![
                    rec(0, DramCommand::activate(0, 0, 1)),
                    rec(11, DramCommand::read(0, 0, 0)),
                    rec(14, DramCommand::read(0, 0, 1)),
                ],
                "tCCD",
            ),
            (
                vec![
                    rec(0, DramCommand::activate(0, 0, 1)),
                    rec(11, DramCommand::write(0, 0, 0)),
                    rec(16, DramCommand::read(0, 0, 1)),
                ],
                "tWTR",
            ),
            (
                vec![
                    rec(0, DramCommand::activate(0, 0, 1)),
                    rec(11, DramCommand::read(0, 0, 0)),
                    rec(28, DramCommand::precharge(0, 0)),
                    rec(30, DramCommand::activate(0, 1, 1)),
                ],
                "",
            ),
            (
                vec![
                    rec(0, DramCommand::activate(0, 0, 1)),
                    rec(5, DramCommand::activate(0, 1, 1)),
                    rec(10, DramCommand::activate(0, 2, 1)),
                    rec(15, DramCommand::activate(0, 3, 1)),
                    rec(20, DramCommand::activate(0, 4, 1)),
                ],
                "tFAW",
            ),
            (vec![rec(0, DramCommand::read(0, 0, 0))], "column access to an open bank"),
        ];
        for (log, rule) in cases {
            let v = validate_log(&log, &p);
            if rule.is_empty() {
                assert!(v.is_empty(), "{v:?}");
            } else {
                assert!(v.iter().any(|x| x.rule == rule), "expected {rule}, got {v:?}");
            }
        }
    }

    #[test]
    fn flags_rtp_and_bus_overlap() {
        let p = DramTimingParams::default();
        let log = vec![
            rec(0, DramCommand::activate(0, 0, 1)),
            rec(5, DramCommand::activate(0, 1, 1)),
            rec(24, DramCommand::read(0, 0, 0)),
            rec(28, DramCommand::precharge(0, 0)),
            // write burst [37, 41) overlaps read burst [35, 39)
            rec(29, DramCommand::write(0, 1, 0)),
        ];
        let v = validate_log(&log, &p);
        assert!(v.iter().any(|x| x.rule == "tRTP"));
        assert!(v.iter().any(|x| x.rule == "data bus exclusivity"));
        assert_eq!(overlapping_bursts(&log, &p), 1);
    }
}
