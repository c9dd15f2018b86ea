mod common;

use std::collections::BTreeMap;

use common::category_run;
use memsched::dram::{encode_address, DramTimingParams, Location};
use memsched::harness::run::{execute, HarnessOptions};
use memsched::harness::{mix_seed, Category, ExperimentConfig};
use memsched::metrics::compute_report;
use memsched::sched::{SchedulerKind, SourceKind};
use memsched::sim::{simulate, Event, SimConfig, SimOptions, SourceInput};
use memsched::workload::TraceRecord;

/// `n` reads of one row, each preceded by `gap` instructions.
fn one_row_trace(cfg: &SimConfig, n: usize, gap: u64) -> Vec<TraceRecord> {
    let g = cfg.geometry();
    (0..n)
        .map(|i| {
            let loc = Location { channel: 0, bank: 2, row: 40, column: i as u32 % 128 };
            TraceRecord { source: 0, gap, address: encode_address(&loc, &g).unwrap(), is_write: false }
        })
        .collect()
}

#[test]
fn single_window_ipc_has_closed_form() {
    // row hits then take exactly t_cl + burst = 50 cycles
    let timing = DramTimingParams { t_cl: 46, ..DramTimingParams::default() };
    for width in [1u32, 3] {
        for gap in [1u64, 3, 10, 50, 200] {
            let cfg = SimConfig { timing, issue_width: width, cycle_budget: 10_000_000, ..SimConfig::default() };
            let n = 200;
            let trace = one_row_trace(&cfg, n, gap);
            let r = simulate(&cfg, &[SourceInput { kind: SourceKind::Cpu, window: 1, class: None, trace }], SimOptions::default()).unwrap();
            let s = &r.sources[0];
            let busy = gap.div_ceil(width as u64);
            // the first request also pays one activation
            let expect = n as u64 * (busy + 50) + timing.t_rcd as u64;
            assert_eq!(s.retired, n as u64 * gap);
            assert_eq!(s.active_cycles, expect, "width {width} gap {gap}");
            if width == 1 {
                let steady = gap as f64 / (gap + 50) as f64;
                assert!((s.ipc() - steady).abs() / steady < 0.01, "gap {gap}: {} vs {steady}", s.ipc());
            }
        }
    }
}

#[derive(Default)]
struct Replay {
    retired: u64,
    finish: Option<u64>,
}

/// Per-source retired count and active span, rebuilt from printed events.
fn replay(events: &[Event]) -> BTreeMap<u32, Replay> {
    let mut out: BTreeMap<u32, Replay> = BTreeMap::new();
    for e in events {
        let line = e.to_string();
        let f: Vec<&str> = line.split_whitespace().collect();
        let (cycle, kind, src, value): (u64, &str, u32, u64) = (f[0].parse().unwrap(), f[1], f[2].parse().unwrap(), f[4].parse().unwrap());
        let r = out.entry(src).or_default();
        match kind {
            "retire" => r.retired += value,
            "finish" => {
                assert!(r.finish.is_none(), "source {src} finished twice");
                r.finish = Some(cycle);
            }
            _ => {}
        }
    }
    out
}

#[test]
fn report_is_recomputable_from_event_logs() {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.categories = vec![Category::HML];
    cfg.experiment.schedulers = vec![SchedulerKind::Sms];
    cfg.experiment.seeds = vec![4];
    cfg.experiment.cycle_budget = 60_000;
    let res = execute(&cfg, HarnessOptions { event_log: true, ..HarnessOptions::default() }).unwrap();
    let row = &res.rows[0];
    let shared = replay(&res.runs[&row.run_id].events);
    assert_eq!(shared.len(), 17);

    let (_, inputs) = memsched::harness::run::workload_inputs(&cfg, "HML", 4).unwrap();
    let alone_cfg = cfg.sim_config(SchedulerKind::Frfcfs, mix_seed(4, 0x534d_53));
    let opts = SimOptions { event_log: true, ..SimOptions::default() };
    let mut ws = 0.0;
    let mut cpu_ws = 0.0;
    let mut max_sd: f64 = 0.0;
    let mut gpu = None;
    for (i, input) in inputs.iter().enumerate() {
        let alone = simulate(&alone_cfg, std::slice::from_ref(input), opts).unwrap();
        let a = &replay(&alone.events)[&0];
        let s = &shared[&(i as u32)];
        let ipc_a = a.retired as f64 / a.finish.unwrap() as f64;
        let ipc_s = s.retired as f64 / s.finish.unwrap() as f64;
        let speedup = ipc_s / ipc_a;
        ws += speedup;
        max_sd = max_sd.max(ipc_a / ipc_s);
        match input.kind {
            SourceKind::Cpu => cpu_ws += speedup,
            SourceKind::Gpu => gpu = Some(speedup),
        }
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    assert!(close(ws, row.weighted_speedup), "{ws} vs {}", row.weighted_speedup);
    assert!(close(max_sd, row.max_slowdown));
    assert!(close(cpu_ws, row.cpu_weighted_speedup));
    assert!(close(gpu.unwrap(), row.gpu_speedup.unwrap()));
}

#[test]
fn retire_events_add_up_to_retired_counts() {
    let (cfg, inputs) = category_run("HM", 9, 40_000, SchedulerKind::Tcm);
    let r = simulate(&cfg, &inputs, SimOptions { event_log: true, ..SimOptions::default() }).unwrap();
    let rep = replay(&r.events);
    for s in &r.sources {
        assert_eq!(rep[&s.source].retired, s.retired);
        assert_eq!(rep[&s.source].finish, Some(s.active_cycles));
    }
}

#[test]
fn sharing_never_beats_running_alone() {
    let eps = 0.02;
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.categories = vec![Category::H, Category::HML, Category::L];
    cfg.experiment.seeds = vec![1, 2];
    cfg.experiment.cycle_budget = 100_000;
    let res = execute(&cfg, HarnessOptions::default()).unwrap();
    let mut worst = f64::INFINITY;
    for s in &res.sources {
        worst = worst.min(s.slowdown);
        assert!(
            s.ipc_shared <= s.ipc_alone * (1.0 + eps),
            "{} source {} ({}): shared {} alone {}",
            s.run_id,
            s.source,
            s.preset,
            s.ipc_shared,
            s.ipc_alone
        );
    }
    assert!(worst > 0.0);
}

#[test]
fn report_rejects_missing_alone_runs() {
    let (cfg, inputs) = category_run("L", 1, 5_000, SchedulerKind::Frfcfs);
    let r = simulate(&cfg, &inputs, SimOptions::default()).unwrap();
    assert!(compute_report(&r.sources, &r.sources[..3], r.cycles).is_err());
    let same = compute_report(&r.sources, &r.sources, r.cycles).unwrap();
    assert!((same.weighted_speedup - 17.0).abs() < 1e-12);
    assert_eq!(same.max_slowdown, 1.0);
}
