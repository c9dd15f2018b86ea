use memsched::dram::{decode_address, encode_address, DramTimingParams, Geometry};
use memsched::workload::{
    measure_stats, parse_trace, IntensityClass, PresetLibrary, ServiceRecord, TraceGenerator, TraceRecord,
};
use proptest::prelude::*;

#[test]
fn address_mapping_is_a_bijection_on_toy_geometries() {
    for (channels, banks, rows, columns) in [(1, 1, 1, 1), (2, 2, 3, 4), (3, 4, 2, 5), (4, 8, 4, 2)] {
        let g = Geometry { channels, banks, rows, columns };
        let mut seen = vec![false; g.capacity() as usize];
        for addr in 0..g.capacity() {
            let loc = decode_address(addr, &g).unwrap();
            assert_eq!(encode_address(&loc, &g).unwrap(), addr);
            let flat = ((loc.channel * rows + loc.row) * banks + loc.bank) * columns + loc.column;
            assert!(!std::mem::replace(&mut seen[flat as usize], true));
        }
        assert!(seen.iter().all(|s| *s));
        assert!(decode_address(g.capacity(), &g).is_err());
    }
}

#[test]
fn gpu_presets_outdemand_every_cpu_preset() {
    let lib = PresetLibrary::builtin();
    let high = lib.cpu(IntensityClass::High);
    assert!(!high.is_empty());
    for g in lib.gpu() {
        for c in lib.all().iter().filter(|s| s.kind == memsched::sched::SourceKind::Cpu) {
            assert!(g.intensity > c.intensity, "{} vs {}", g.name, c.name);
        }
    }
}

/// Per-cycle BLP and RBL straight from the definition.
fn brute_stats(log: &[ServiceRecord]) -> (f64, f64) {
    let end = log.iter().map(|r| r.completion).max().unwrap();
    let (mut busy, mut banks) = (0u64, 0u64);
    for t in 0..end {
        let live: std::collections::BTreeSet<usize> =
            log.iter().filter(|r| r.arrival <= t && t < r.completion).map(|r| r.bank).collect();
        if !live.is_empty() {
            busy += 1;
            banks += live.len() as u64;
        }
    }
    let blp = if busy == 0 { 0.0 } else { banks as f64 / busy as f64 };
    (blp, log.iter().filter(|r| r.row_hit).count() as f64 / log.len() as f64)
}

proptest! {
    #[test]
    fn stream_stats_match_definition(recs in prop::collection::vec((0u64..500, 0u64..80, 0usize..6, any::<bool>()), 1..60)) {
        let log: Vec<ServiceRecord> = recs
            .iter()
            .enumerate()
            .map(|(i, &(a, len, bank, hit))| ServiceRecord { request: i as u64, source: 0, arrival: a, completion: a + len, bank, row_hit: hit })
            .collect();
        let s = measure_stats(&log, 1000).unwrap();
        let (blp, rbl) = brute_stats(&log);
        prop_assert!((s.blp - blp).abs() < 1e-12, "{} vs {}", s.blp, blp);
        prop_assert!((s.rbl - rbl).abs() < 1e-12);
        prop_assert!((s.intensity - log.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic(idx in any::<prop::sample::Index>(), seed in any::<u64>(), len in 1usize..2000) {
        let lib = PresetLibrary::builtin();
        let spec = &lib.all()[idx.index(lib.all().len())];
        let gen = TraceGenerator::new(DramTimingParams::default(), 4, 3);
        let a = gen.generate(spec, seed, len).unwrap();
        prop_assert_eq!(a.len(), len);
        prop_assert_eq!(&a, &gen.generate(spec, seed, len).unwrap());
        let g = gen.geometry();
        prop_assert!(a.iter().all(|r| decode_address(r.address, &g).is_ok()));
        if len > 50 {
            prop_assert_ne!(&a, &gen.generate(spec, seed ^ 1, len).unwrap());
        }
    }

    #[test]
    fn trace_text_round_trips(recs in prop::collection::vec((0u32..20, 0u64..10_000, 0u64..1 << 30, any::<bool>()), 0..100)) {
        let trace: Vec<TraceRecord> = recs.iter().map(|&(source, gap, address, is_write)| TraceRecord { source, gap, address, is_write }).collect();
        let mut buf = Vec::new();
        memsched::workload::write_trace(&mut buf, &trace).unwrap();
        prop_assert_eq!(parse_trace(&String::from_utf8(buf).unwrap()).unwrap(), trace);
    }
}
