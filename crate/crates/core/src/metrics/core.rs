use crate::dram::Cycle;
use crate::sched::{SourceId, SourceKind};
use crate::workload::TraceRecord;

/// What a core did in one cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepOutcome {
    pub retired: u64,
    pub issued: bool,
}

/// Trace-replay core.
///
/// A CPU retires up to `issue_width` instructions of the current gap per
/// cycle, then tries to hand the request to the memory system on the next
/// cycle; it retires nothing while its window is full or admission stalls.
/// A GPU counts its gap in idle cycles, issues whenever its window has room
/// and earns one unit of progress per completed request.
#[derive(Debug, Clone)]
pub struct CoreModel {
    pub source: SourceId,
    pub kind: SourceKind,
    pub window: usize,
    issue_width: u32,
    trace: Vec<TraceRecord>,
    next: usize,
    remaining_gap: u64,
    outstanding: usize,
    retired: u64,
    finished_at: Option<Cycle>,
}

impl CoreModel {
    pub fn new(source: SourceId, kind: SourceKind, window: usize, issue_width: u32, trace: Vec<TraceRecord>) -> Self {
        assert!(window >= 1 && issue_width >= 1);
        let remaining_gap = trace.first().map_or(0, |r| r.gap);
        Self {
            source,
            kind,
            window,
            issue_width,
            trace,
            next: 0,
            remaining_gap,
            outstanding: 0,
            retired: 0,
            finished_at: None,
        }
    }

    pub fn retired(&self) -> u64 {
        self.retired
    }

    pub fn outstanding(&self) -> usize {
        self.outstanding
    }

    pub fn next_index(&self) -> usize {
        self.next
    }

    pub fn is_idle(&self) -> bool {
        self.next >= self.trace.len() && self.outstanding == 0
    }

    /// Cycle at which the trace ran out and the last request returned.
    pub fn finished_at(&self) -> Option<Cycle> {
        self.finished_at
    }

    /// Advances one cycle. `admit` offers the next request to the memory
    /// system and reports whether it was accepted.
    pub fn step(&mut self, cycle: Cycle, mut admit: impl FnMut(&TraceRecord) -> bool) -> StepOutcome {
        let mut out = StepOutcome::default();
        if self.next >= self.trace.len() {
            self.check_finished(cycle);
            return out;
        }
        match self.kind {
            SourceKind::Cpu => {
                if self.outstanding >= self.window {
                    return out;
                }
                if self.remaining_gap > 0 {
                    let n = self.remaining_gap.min(self.issue_width as u64);
                    self.remaining_gap -= n;
                    self.retired += n;
                    out.retired = n;
                    return out;
                }
            }
            SourceKind::Gpu => {
                if self.remaining_gap > 0 {
                    self.remaining_gap -= 1;
                    return out;
                }
                if self.outstanding >= self.window {
                    return out;
                }
            }
        }
        if admit(&self.trace[self.next]) {
            self.outstanding += 1;
            self.next += 1;
            self.remaining_gap = self.trace.get(self.next).map_or(0, |r| r.gap);
            out.issued = true;
        }
        out
    }

    /// A request of this core finished; returns progress units retired.
    pub fn on_complete(&mut self, cycle: Cycle) -> u64 {
        assert!(self.outstanding > 0, "completion without an outstanding request");
        self.outstanding -= 1;
        let units = match self.kind {
            SourceKind::Gpu => 1,
            SourceKind::Cpu => 0,
        };
        self.retired += units;
        self.check_finished(cycle);
        units
    }

    fn check_finished(&mut self, cycle: Cycle) {
        if self.finished_at.is_none() && self.is_idle() {
            self.finished_at = Some(cycle);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(gaps: &[u64]) -> Vec<TraceRecord> {
        gaps.iter()
            .map(|&gap| TraceRecord { source: 0, gap, address: 0, is_write: false })
            .collect()
    }

    #[test]
    fn gap_of_one_width_issues_next_cycle() {
        let mut c = CoreModel::new(0, SourceKind::Cpu, 4, 3, trace(&[3, 0]));
        assert_eq!(c.step(0, |_| true), StepOutcome { retired: 3, issued: false });
        assert_eq!(c.step(1, |_| true), StepOutcome { retired: 0, issued: true });
    }

    #[test]
    fn full_window_stalls_retirement() {
        let mut c = CoreModel::new(0, SourceKind::Cpu, 1, 3, trace(&[0, 9]));
        assert!(c.step(0, |_| true).issued);
        for t in 1..10 {
            assert_eq!(c.step(t, |_| true).retired, 0);
        }
        c.on_complete(10);
        assert_eq!(c.step(10, |_| true).retired, 3);
    }

    #[test]
    fn rejected_admission_retries() {
        let mut c = CoreModel::new(0, SourceKind::Cpu, 2, 3, trace(&[0]));
        assert!(!c.step(0, |_| false).issued);
        assert!(c.step(1, |_| true).issued);
        c.on_complete(40);
        assert!(c.is_idle());
        assert_eq!(c.finished_at(), Some(40));
    }

    #[test]
    fn gpu_window_bounds_outstanding() {
        let mut c = CoreModel::new(16, SourceKind::Gpu, 3, 3, trace(&[0; 10]));
        let issued = (0..10).filter(|&t| c.step(t, |_| true).issued).count();
        assert_eq!(issued, 3);
        assert_eq!(c.outstanding(), 3);
        assert_eq!(c.on_complete(20), 1);
        assert_eq!(c.retired(), 1);
    }

    #[test]
    fn gpu_gap_counts_idle_cycles() {
        let mut c = CoreModel::new(16, SourceKind::Gpu, 8, 3, trace(&[2, 0]));
        let pattern: Vec<bool> = (0..4).map(|t| c.step(t, |_| true).issued).collect();
        assert_eq!(pattern, vec![false, false, true, true]);
    }
}
