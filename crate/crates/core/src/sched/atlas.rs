use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::buffer::BufferEntry;
use super::frfcfs::{RankKey, RankPolicy};
use super::SourceId;
use crate::dram::{CommandKind, Cycle, DramCommand, DramTimingParams};

/// Placeholder values: a desk-scale quantum and the usual decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtlasConfig {
    pub quantum: Cycle,
    pub alpha: f64,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            quantum: 100_000,
            alpha: 0.875,
        }
    }
}

/// Least-attained-service ranking. Each command issued for a source adds the
/// bank cycles it occupies (tRCD, tRP or one burst); the running totals are
/// scaled by `alpha` at every quantum boundary.
#[derive(Debug, Clone)]
pub struct Atlas {
    config: AtlasConfig,
    service: HashMap<SourceId, f64>,
}

impl Atlas {
    pub fn new(config: AtlasConfig) -> Self {
        Self {
            config,
            service: HashMap::new(),
        }
    }

    pub fn attained_service(&self, source: SourceId) -> f64 {
        self.service.get(&source).copied().unwrap_or(0.0)
    }

    pub fn add_service(&mut self, source: SourceId, cycles: f64) {
        *self.service.entry(source).or_default() += cycles;
    }

    /// Sources ordered from highest to lowest priority.
    pub fn rank_order(&self) -> Vec<SourceId> {
        let mut v: Vec<(u64, SourceId)> = self
            .service
            .iter()
            .map(|(&s, &a)| (a.to_bits(), s))
            .collect();
        v.sort_unstable();
        v.into_iter().map(|(_, s)| s).collect()
    }
}

impl RankPolicy for Atlas {
    fn name(&self) -> &'static str {
        "atlas"
    }

    fn quantum(&self) -> Option<Cycle> {
        Some(self.config.quantum)
    }

    fn on_quantum_boundary(&mut self, _cycle: Cycle) {
        for v in self.service.values_mut() {
            *v *= self.config.alpha;
        }
    }

    fn rank(&self, entry: &BufferEntry) -> RankKey {
        // non-negative f64 bit patterns order like the values themselves
        self.attained_service(entry.req.source).to_bits()
    }

    fn on_issue(&mut self, entry: &BufferEntry, cmd: &DramCommand, p: &DramTimingParams, _cycle: Cycle) {
        let cycles = match cmd.kind {
            CommandKind::Activate => p.t_rcd,
            CommandKind::Precharge => p.t_rp,
            CommandKind::Read | CommandKind::Write => p.burst_cycles,
        };
        self.add_service(entry.req.source, cycles as f64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::Location;
    use crate::sched::{MemoryRequest, SourceKind};

    fn entry(src: SourceId) -> BufferEntry {
        let loc = Location { channel: 0, bank: 0, row: 0, column: 0 };
        BufferEntry {
            req: MemoryRequest::new(0, src, SourceKind::Cpu, 0, loc, false),
            marked: false,
        }
    }

    #[test]
    fn least_served_source_ranks_first() {
        let mut a = Atlas::new(AtlasConfig::default());
        a.add_service(1, 10_000.0);
        assert!(a.rank(&entry(0)) < a.rank(&entry(1)));
    }

    #[test]
    fn equal_service_ties() {
        let mut a = Atlas::new(AtlasConfig::default());
        a.add_service(1, 40.0);
        a.add_service(2, 40.0);
        assert_eq!(a.rank(&entry(1)), a.rank(&entry(2)));
    }

    #[test]
    fn quantum_decay() {
        let mut a = Atlas::new(AtlasConfig::default());
        a.add_service(0, 800.0);
        a.on_quantum_boundary(100_000);
        assert_eq!(a.attained_service(0), 700.0);
    }
}
