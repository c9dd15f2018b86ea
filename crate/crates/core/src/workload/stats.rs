use serde::Serialize;

use super::WorkloadError;
use crate::dram::command::RequestId;
use crate::dram::Cycle;
use crate::sched::SourceId;

/// One serviced request as observed by the memory system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceRecord {
    pub request: RequestId,
    pub source: SourceId,
    /// Cycle the controller accepted the request.
    pub arrival: Cycle,
    pub completion: Cycle,
    /// Bank index across all channels.
    pub bank: usize,
    pub row_hit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamStats {
    /// Requests per thousand cycles.
    pub intensity: f64,
    pub rbl: f64,
    /// Mean number of banks with an in-flight request, over cycles with at
    /// least one request in flight.
    pub blp: f64,
    pub requests: usize,
}

/// Statistics of a service log covering `total_cycles` cycles.
pub fn measure_stats(log: &[ServiceRecord], total_cycles: Cycle) -> Result<StreamStats, WorkloadError> {
    if log.is_empty() || total_cycles == 0 {
        return Err(WorkloadError::EmptyLog);
    }
    let hits = log.iter().filter(|r| r.row_hit).count();
    let mut events: Vec<(Cycle, usize, i32)> = Vec::with_capacity(2 * log.len());
    for r in log {
        if r.completion > r.arrival {
            events.push((r.arrival, r.bank, 1));
            events.push((r.completion, r.bank, -1));
        }
    }
    events.sort_unstable();
    let banks = log.iter().map(|r| r.bank).max().unwrap_or(0) + 1;
    let mut per_bank = vec![0i32; banks];
    let mut active = 0u64;
    let (mut busy, mut bank_cycles) = (0u64, 0u64);
    let mut i = 0;
    while i < events.len() {
        let now = events[i].0;
        while i < events.len() && events[i].0 == now {
            let (_, bank, delta) = events[i];
            let before = per_bank[bank];
            per_bank[bank] += delta;
            match (before, per_bank[bank]) {
                (0, n) if n > 0 => active += 1,
                (b, 0) if b > 0 => active -= 1,
                _ => {}
            }
            i += 1;
        }
        if let Some(&(next, _, _)) = events.get(i) {
            if active > 0 {
                busy += next - now;
                bank_cycles += active * (next - now);
            }
        }
    }
    Ok(StreamStats {
        intensity: 1000.0 * log.len() as f64 / total_cycles as f64,
        rbl: hits as f64 / log.len() as f64,
        blp: if busy == 0 { 0.0 } else { bank_cycles as f64 / busy as f64 },
        requests: log.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, arrival: Cycle, completion: Cycle, bank: usize, row_hit: bool) -> ServiceRecord {
        ServiceRecord {
            request: id,
            source: 0,
            arrival,
            completion,
            bank,
            row_hit,
        }
    }

    #[test]
    fn one_row_consecutive_gives_n_minus_one_over_n() {
        let log: Vec<_> = (0..8).map(|i| rec(i, i * 10, i * 10 + 5, 0, i > 0)).collect();
        let s = measure_stats(&log, 100).unwrap();
        assert!((s.rbl - 7.0 / 8.0).abs() < 1e-12);
        assert!((s.blp - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_banks_always_busy_gives_two() {
        let mut log = Vec::new();
        for i in 0..10u64 {
            log.push(rec(2 * i, i * 20, i * 20 + 20, 0, false));
            log.push(rec(2 * i + 1, i * 20, i * 20 + 20, 1, false));
        }
        let s = measure_stats(&log, 200).unwrap();
        assert!((s.blp - 2.0).abs() < 1e-12, "{}", s.blp);
    }

    #[test]
    fn intensity_is_requests_per_kilocycle() {
        let log: Vec<_> = (0..100).map(|i| rec(i, i * 200, i * 200 + 30, 0, false)).collect();
        let s = measure_stats(&log, 20_000).unwrap();
        assert!((s.intensity - 5.0).abs() < 1e-12);
    }

    #[test]
    fn empty_log_is_an_error() {
        assert!(matches!(measure_stats(&[], 100), Err(WorkloadError::EmptyLog)));
    }
}
