mod common;

use common::{category_run, config, random_stream, run_stream};
use memsched::dram::{validate_log, Channel, CommandKind, DramTimingParams, Location};
use memsched::sched::{MemoryRequest, MemoryScheduler, SchedulerKind, SourceKind};
use memsched::sim::{simulate, SimOptions};
use memsched::sms::{BatchScheduler, Dcs, FormationFifo, SmsConfig, SmsScheduler};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn batches_stay_homogeneous_and_contiguous(seed in any::<u64>(), cat in prop::sample::select(vec!["H", "HM", "HML", "L"])) {
        let (cfg, inputs) = category_run(cat, seed, 30_000, SchedulerKind::Sms);
        let opts = SimOptions { sms_audit: true, command_log: true, ..SimOptions::default() };
        let r = simulate(&cfg, &inputs, opts).unwrap();
        let a = r.sms_audit.unwrap();
        prop_assert!(a.batches_checked > 0);
        prop_assert_eq!(a.homogeneity_violations, 0);
        prop_assert_eq!(a.contiguity_violations, 0);
        prop_assert_eq!(a.accounting_violations, 0);
        prop_assert!(validate_log(&r.command_log, &cfg.timing).is_empty());
    }

    /// n same-row requests at a closed bank: one ACT, n columns, n-1 hits.
    #[test]
    fn batch_yields_n_minus_one_hits(n in 1usize..=10, row in 0u32..1000, bank in 0u32..8, writes in any::<u16>()) {
        let cfg = SmsConfig { age_threshold: 0, ..SmsConfig::default() };
        let mut s = SmsScheduler::new(cfg, 1, 8, 1);
        let mut ch = Channel::new(0, DramTimingParams::default());
        for i in 0..n {
            let loc = Location { channel: 0, bank, row, column: i as u32 };
            let r = MemoryRequest::new(i as u64, 0, SourceKind::Cpu, 0, loc, writes >> i & 1 == 1);
            prop_assert!(s.admit(r, 0).is_accepted());
        }
        let mut kinds = Vec::new();
        for c in 0..2000 {
            s.tick(c);
            if let Some(cmd) = s.pick_command(c, &ch) {
                let out = ch.issue(&cmd, c).unwrap();
                s.on_issue(&cmd, &out, c);
                kinds.push(cmd.kind);
            }
        }
        prop_assert_eq!(kinds.iter().filter(|k| **k == CommandKind::Activate).count(), 1);
        prop_assert_eq!(kinds.iter().filter(|k| k.is_column()).count(), n);
        let hits: usize = (0..n as u64).map(|id| usize::from(s.complete(id, 5000).unwrap().row_hit().unwrap())).sum();
        prop_assert_eq!(hits, n - 1);
    }

    /// Replays a fixed sequence of ready sets through stage 2 and checks the
    /// p = 0 and p = 1 selection rules against a reference.
    #[test]
    fn degenerate_p_selection(steps in prop::collection::vec((any::<u16>(), prop::collection::vec(0usize..50, 9)), 1..80), seed in any::<u64>()) {
        let n = 9;
        let mut rr = BatchScheduler::new(0.0, seed);
        let mut sjf = BatchScheduler::new(1.0, seed);
        let mut cursor = 0usize;
        for (mask, in_flight) in &steps {
            let ready: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let expect_rr = (0..n).map(|k| (cursor + k) % n).find(|&i| ready[i]);
            if let Some(i) = expect_rr {
                cursor = (i + 1) % n;
            }
            let expect_sjf = (0..n).filter(|&i| ready[i]).min_by_key(|&i| (in_flight[i], i));
            prop_assert_eq!(pick_once(&mut rr, &ready, in_flight), expect_rr);
            prop_assert_eq!(pick_once(&mut sjf, &ready, in_flight), expect_sjf);
        }
    }
}

/// One stage-2 pick over FIFOs whose readiness is `ready`; drains the
/// chosen single-request batch so the scheduler is idle again.
fn pick_once(bs: &mut BatchScheduler, ready: &[bool], in_flight: &[usize]) -> Option<usize> {
    let mut next = 0;
    let mut fifos: Vec<FormationFifo> = (0..ready.len())
        .map(|i| {
            let mut f = FormationFifo::new(i as u32, 4, 0);
            if ready[i] {
                let loc = Location { channel: 0, bank: i as u32 % 8, row: 1, column: 0 };
                f.insert(MemoryRequest::new(i as u64, i as u32, SourceKind::Cpu, 0, loc, false), &mut next);
                f.tick(0);
            }
            f
        })
        .collect();
    let chosen = bs.pick(&fifos, in_flight, 0);
    if chosen.is_some() {
        let mut dcs = Dcs::new(8, 4);
        bs.drain_step(&mut fifos, &mut dcs);
        assert!(bs.draining().is_none());
    }
    chosen
}

#[test]
fn drains_after_arrivals_stop_for_any_p() {
    for p in [0.0, 0.25, 0.5, 0.9, 1.0] {
        for seed in 0..6 {
            let mut cfg = config(SchedulerKind::Sms, 1, seed);
            cfg.sms.p = p;
            let reqs = random_stream(seed, 400, 8, 4, 800, 6);
            // run_stream panics if anything is still outstanding at its limit
            let (log, end) = run_stream(&cfg, &reqs, 6);
            assert_eq!(log.iter().filter(|r| r.command.kind.is_column()).count(), 400);
            assert!(end < 800 + 400 * 60, "p={p} seed={seed}: drained only at {end}");
        }
    }
}
