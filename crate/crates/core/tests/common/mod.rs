//! Shared helpers for integration tests: an independent FR-FCFS replay
//! oracle, a direct engine driver and random request streams.
#![allow(dead_code)]

use memsched::dram::{CommandKind, CommandRecord, Cycle, DramCommand, DramTimingParams, Location};
use memsched::sched::{SchedulerKind, SourceKind};
use memsched::harness::run::workload_inputs;
use memsched::harness::ExperimentConfig;
use memsched::sim::{Engine, SimConfig, SimOptions, SourceInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One request of an open-loop stream, admitted at `arrival`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Req {
    pub arrival: Cycle,
    pub source: u32,
    pub loc: Location,
    pub is_write: bool,
}

/// Random stream on one channel: `n` requests over `banks` banks and
/// `rows` rows, arrivals spread over `span` cycles, sorted by arrival.
pub fn random_stream(seed: u64, n: usize, banks: u32, rows: u32, span: Cycle, sources: u32) -> Vec<Req> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Req> = (0..n)
        .map(|_| Req {
            arrival: rng.random_range(0..span.max(1)),
            source: rng.random_range(0..sources),
            loc: Location {
                channel: 0,
                bank: rng.random_range(0..banks),
                row: rng.random_range(0..rows),
                column: rng.random_range(0..128),
            },
            is_write: rng.random_bool(0.3),
        })
        .collect();
    v.sort_by_key(|r| r.arrival);
    v
}

/// Feeds `reqs` straight into an engine (no core model) and runs until
/// every request has completed. Returns the command log and the final cycle.
pub fn run_stream(cfg: &SimConfig, reqs: &[Req], sources: usize) -> (Vec<CommandRecord>, Cycle) {
    let opts = SimOptions { command_log: true, ..SimOptions::default() };
    let mut engine = Engine::new(cfg, sources, opts).expect("valid config");
    let mut pending: std::collections::VecDeque<Req> = reqs.iter().copied().collect();
    let mut done = 0;
    let limit = reqs.iter().map(|r| r.arrival).max().unwrap_or(0) + 200_000;
    let mut cycle = 0;
    while done < reqs.len() {
        assert!(cycle < limit, "requests still outstanding at cycle {cycle}");
        engine.complete_due(cycle, |_, _| done += 1);
        // arrivals are retried each cycle until admitted, in order
        while let Some(r) = pending.front() {
            if r.arrival > cycle || !engine.admit(cycle, r.source, SourceKind::Cpu, r.loc, r.is_write) {
                break;
            }
            pending.pop_front();
        }
        engine.schedule(cycle).expect("protocol-clean issue");
        cycle += 1;
    }
    (engine.command_log().to_vec(), cycle)
}

pub fn config(scheduler: SchedulerKind, channels: u32, seed: u64) -> SimConfig {
    SimConfig { scheduler, channels, seed, ..SimConfig::default() }
}

/// Brute-force FR-FCFS replay on a single channel with an unbounded buffer.
///
/// Every cycle it enumerates all arrived, unserved requests, derives each
/// one's next command from its own open-row table, checks legality against
/// its own command history, and issues the legal command of the best
/// request: row hits first, then oldest arrival, then lowest id. A miss at a
/// bank is not served while any waiting request hits that bank's open row.
pub fn oracle_frfcfs(reqs: &[Req], p: &DramTimingParams) -> Vec<CommandRecord> {
    let banks = p.banks_per_channel as usize;
    let mut open: Vec<Option<u32>> = vec![None; banks];
    let mut served = vec![false; reqs.len()];
    let mut log: Vec<CommandRecord> = Vec::new();
    let mut cycle: Cycle = 0;
    while served.iter().any(|s| !s) {
        let mut best: Option<((bool, Cycle, usize), DramCommand)> = None;
        for (id, r) in reqs.iter().enumerate() {
            if served[id] || r.arrival > cycle {
                continue;
            }
            let b = r.loc.bank as usize;
            let hit = open[b] == Some(r.loc.row);
            let cmd = match open[b] {
                Some(row) if row == r.loc.row => {
                    if r.is_write {
                        DramCommand::write(0, r.loc.bank, r.loc.column)
                    } else {
                        DramCommand::read(0, r.loc.bank, r.loc.column)
                    }
                }
                Some(row) => {
                    let blocked = reqs
                        .iter()
                        .enumerate()
                        .any(|(j, q)| !served[j] && q.arrival <= cycle && q.loc.bank == r.loc.bank && q.loc.row == row);
                    if blocked {
                        continue;
                    }
                    DramCommand::precharge(0, r.loc.bank)
                }
                None => DramCommand::activate(0, r.loc.bank, r.loc.row),
            }
            .for_request(id as u64);
            if !legal(&log, &open, &cmd, cycle, p) {
                continue;
            }
            let key = (!hit, r.arrival, id);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, cmd));
            }
        }
        if let Some((_, cmd)) = best {
            let b = cmd.bank as usize;
            match cmd.kind {
                CommandKind::Activate => open[b] = cmd.row,
                CommandKind::Precharge => open[b] = None,
                _ => served[cmd.request.unwrap() as usize] = true,
            }
            log.push(CommandRecord { cycle, command: cmd });
        }
        cycle += 1;
        assert!(cycle < 1_000_000, "oracle did not finish");
    }
    log
}

fn legal(log: &[CommandRecord], open: &[Option<u32>], cmd: &DramCommand, now: Cycle, p: &DramTimingParams) -> bool {
    let last = |pred: &dyn Fn(&DramCommand) -> bool| log.iter().rev().find(|r| pred(&r.command)).map(|r| r.cycle);
    let after = |t: Option<Cycle>, gap: u32| t.is_none_or(|t| now >= t + gap as Cycle);
    let bank = cmd.bank;
    let same = |k: CommandKind| move |c: &DramCommand| c.bank == bank && c.kind == k;
    match cmd.kind {
        CommandKind::Activate => {
            let acts: Vec<Cycle> = log.iter().filter(|r| r.command.kind == CommandKind::Activate).map(|r| r.cycle).collect();
            open[bank as usize].is_none()
                && after(last(&same(CommandKind::Precharge)), p.t_rp)
                && after(last(&same(CommandKind::Activate)), p.t_rc)
                && after(acts.last().copied(), p.t_rrd)
                && acts.iter().filter(|&&t| now < t + p.t_faw as Cycle).count() < 4
        }
        CommandKind::Precharge => {
            open[bank as usize].is_some()
                && after(last(&same(CommandKind::Activate)), p.t_ras)
                && after(last(&same(CommandKind::Read)), p.t_rtp)
        }
        CommandKind::Read | CommandKind::Write => {
            let lat = |k: CommandKind| if k == CommandKind::Read { p.t_cl } else { p.t_cwl } as Cycle;
            let start = now + lat(cmd.kind);
            let end = start + p.burst_cycles as Cycle;
            let bus_free = log.iter().filter(|r| r.command.kind.is_column()).all(|r| {
                let s = r.cycle + lat(r.command.kind);
                end <= s || s + p.burst_cycles as Cycle <= start
            });
            open[bank as usize].is_some()
                && after(last(&same(CommandKind::Activate)), p.t_rcd)
                && after(last(&|c: &DramCommand| c.kind.is_column()), p.t_ccd)
                && (cmd.kind == CommandKind::Write || after(last(&|c: &DramCommand| c.kind == CommandKind::Write), p.t_wtr))
                && bus_free
        }
    }
}

/// Sources of one category draw exactly as the harness builds them, sized
/// for `budget` cycles, plus the matching simulation config.
pub fn category_run(category: &str, seed: u64, budget: Cycle, scheduler: SchedulerKind) -> (SimConfig, Vec<SourceInput>) {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.cycle_budget = budget;
    let (_, inputs) = workload_inputs(&cfg, category, seed).expect("workload builds");
    (cfg.sim_config(scheduler, seed), inputs)
}
