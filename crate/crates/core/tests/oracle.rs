mod common;

use common::{config, oracle_frfcfs, random_stream, run_stream, Req};
use memsched::dram::{CommandKind, DramTimingParams, Location};
use memsched::sched::SchedulerKind;
use proptest::prelude::*;

fn at(arrival: u64, bank: u32, row: u32, is_write: bool) -> Req {
    Req { arrival, source: 0, loc: Location { channel: 0, bank, row, column: 0 }, is_write }
}

fn compare(reqs: &[Req]) {
    let cfg = config(SchedulerKind::Frfcfs, 1, 0);
    let (sim, _) = run_stream(&cfg, reqs, 1);
    let oracle = oracle_frfcfs(reqs, &DramTimingParams::default());
    assert_eq!(sim, oracle);
}

#[test]
fn hit_jumps_ahead_of_older_conflict() {
    // req 1 (row 7) is older than req 2 (row 5) but req 2 hits the open row
    let reqs = [at(0, 0, 5, false), at(1, 0, 7, false), at(2, 0, 5, false)];
    compare(&reqs);
    let oracle = oracle_frfcfs(&reqs, &DramTimingParams::default());
    let served: Vec<_> = oracle.iter().filter(|r| r.command.kind.is_column()).map(|r| r.command.request.unwrap()).collect();
    assert_eq!(served, vec![0, 2, 1]);
}

#[test]
fn write_then_read_respects_turnaround() {
    compare(&[at(0, 0, 1, true), at(0, 1, 1, false), at(3, 0, 1, false)]);
}

#[test]
fn five_banks_hit_the_activation_window() {
    let reqs: Vec<Req> = (0..5).map(|b| at(0, b, 3, false)).collect();
    compare(&reqs);
    let log = oracle_frfcfs(&reqs, &DramTimingParams::default());
    let acts: Vec<u64> = log.iter().filter(|r| r.command.kind == CommandKind::Activate).map(|r| r.cycle).collect();
    assert_eq!(acts, vec![0, 5, 10, 15, 24]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedule_matches_oracle(seed in any::<u64>(), n in 1usize..=50, banks in 1u32..=2, rows in 1u32..=4, span in 1u64..400) {
        let reqs = random_stream(seed, n, banks, rows, span, 1);
        let cfg = config(SchedulerKind::Frfcfs, 1, 0);
        let (sim, _) = run_stream(&cfg, &reqs, 1);
        let oracle = oracle_frfcfs(&reqs, &DramTimingParams::default());
        prop_assert_eq!(sim, oracle);
    }
}
