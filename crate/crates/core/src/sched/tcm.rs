use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::buffer::{BufferEntry, RequestBuffer};
use super::frfcfs::{RankKey, RankPolicy};
use super::{MemoryRequest, SourceId};
use crate::dram::{Cycle, DramCommand, DramTimingParams};

/// Placeholder values for the clustering quantum, the
/// latency-cluster bandwidth threshold and the shuffle interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcmConfig {
    pub quantum: Cycle,
    pub cluster_threshold: f64,
    pub shuffle_interval: Cycle,
}

impl Default for TcmConfig {
    fn default() -> Self {
        Self {
            quantum: 10_000,
            cluster_threshold: 0.10,
            shuffle_interval: 800,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cluster {
    Latency,
    Bandwidth,
}

#[derive(Debug, Clone, Copy, Default)]
struct QuantumStats {
    arrivals: u64,
    served: u64,
}

/// Thread-cluster memory scheduling.
///
/// At each quantum boundary sources are sorted by the requests they sent
/// during the quantum. Starting from the least intensive source (which always
/// joins), sources enter the latency-sensitive cluster while the cluster's
/// share of served requests stays within `cluster_threshold`. The latency
/// cluster outranks the bandwidth cluster; inside it lower intensity wins.
/// The bandwidth cluster's order rotates by one every shuffle interval.
#[derive(Debug, Clone)]
pub struct Tcm {
    config: TcmConfig,
    stats: BTreeMap<SourceId, QuantumStats>,
    keys: HashMap<SourceId, RankKey>,
    latency: Vec<(SourceId, u64)>,
    bandwidth: Vec<SourceId>,
}

impl Tcm {
    pub fn new(config: TcmConfig) -> Self {
        Self {
            config,
            stats: BTreeMap::new(),
            keys: HashMap::new(),
            latency: Vec::new(),
            bandwidth: Vec::new(),
        }
    }

    pub fn cluster_of(&self, source: SourceId) -> Cluster {
        if self.bandwidth.contains(&source) {
            Cluster::Bandwidth
        } else {
            Cluster::Latency
        }
    }

    pub fn bandwidth_order(&self) -> &[SourceId] {
        &self.bandwidth
    }

    fn recluster(&mut self) {
        let mut by_intensity: Vec<(u64, SourceId, u64)> = self
            .stats
            .iter()
            .map(|(&s, st)| (st.arrivals, s, st.served))
            .collect();
        by_intensity.sort_unstable();
        let total: u64 = by_intensity.iter().map(|x| x.2).sum();
        let budget = self.config.cluster_threshold * total as f64;
        self.latency.clear();
        self.bandwidth.clear();
        let mut used = 0u64;
        for (i, &(arrivals, src, served)) in by_intensity.iter().enumerate() {
            if i == 0 || (used + served) as f64 <= budget {
                used += served;
                self.latency.push((src, arrivals));
            } else {
                self.bandwidth.push(src);
            }
        }
        for st in self.stats.values_mut() {
            *st = QuantumStats::default();
        }
        self.rebuild_keys();
    }

    fn rebuild_keys(&mut self) {
        self.keys.clear();
        for &(src, arrivals) in &self.latency {
            self.keys.insert(src, arrivals);
        }
        for (pos, &src) in self.bandwidth.iter().enumerate() {
            self.keys.insert(src, (1 << 40) + pos as RankKey);
        }
    }

    fn shuffle(&mut self) {
        if self.bandwidth.len() > 1 {
            self.bandwidth.rotate_left(1);
            self.rebuild_keys();
        }
    }
}

impl RankPolicy for Tcm {
    fn name(&self) -> &'static str {
        "tcm"
    }

    fn quantum(&self) -> Option<Cycle> {
        Some(self.config.quantum)
    }

    fn on_quantum_boundary(&mut self, _cycle: Cycle) {
        self.recluster();
    }

    fn on_arrival(&mut self, req: &MemoryRequest, _cycle: Cycle) {
        self.stats.entry(req.source).or_default().arrivals += 1;
    }

    fn prepare(&mut self, cycle: Cycle, _buffer: &mut RequestBuffer) {
        if cycle > 0 && cycle % self.config.shuffle_interval == 0 {
            self.shuffle();
        }
    }

    fn rank(&self, entry: &BufferEntry) -> RankKey {
        // sources not seen at the last boundary count as zero-intensity
        self.keys.get(&entry.req.source).copied().unwrap_or(0)
    }

    fn on_issue(&mut self, entry: &BufferEntry, cmd: &DramCommand, _p: &DramTimingParams, _cycle: Cycle) {
        if cmd.kind.is_column() {
            self.stats.entry(entry.req.source).or_default().served += 1;
        }
    }
}
