use std::collections::HashMap;

use super::buffer::{BufferEntry, RequestBuffer};
use super::frfcfs::{RankKey, RankPolicy};
use super::SourceId;
use crate::dram::{Cycle, DramCommand, DramTimingParams};

const UNMARKED: RankKey = RankKey::MAX / 2;

/// Parallelism-aware batch scheduling: whenever the current batch has been
/// fully issued, every waiting request is marked into a new batch. Marked
/// requests precede unmarked ones; within the batch, sources with the
/// smallest per-bank load go first.
#[derive(Debug, Default, Clone)]
pub struct ParBs {
    marked_waiting: usize,
    ranks: HashMap<SourceId, RankKey>,
    batches_formed: u64,
}

impl ParBs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn batches_formed(&self) -> u64 {
        self.batches_formed
    }

    pub fn source_rank(&self, source: SourceId) -> Option<RankKey> {
        self.ranks.get(&source).copied()
    }

    fn form_batch(&mut self, buffer: &mut RequestBuffer) {
        // (source) -> per-bank marked counts
        let mut loads: HashMap<SourceId, HashMap<u32, usize>> = HashMap::new();
        for entry in buffer.waiting_mut() {
            entry.marked = true;
            *loads
                .entry(entry.req.source)
                .or_default()
                .entry(entry.req.loc.bank)
                .or_default() += 1;
        }
        self.marked_waiting = buffer.waiting().len();
        let mut order: Vec<(usize, usize, SourceId)> = loads
            .into_iter()
            .map(|(src, banks)| {
                let max = banks.values().copied().max().unwrap_or(0);
                let total = banks.values().sum();
                (max, total, src)
            })
            .collect();
        order.sort_unstable();
        self.ranks = order
            .into_iter()
            .enumerate()
            .map(|(rank, (_, _, src))| (src, rank as RankKey))
            .collect();
        self.batches_formed += 1;
    }
}

impl RankPolicy for ParBs {
    fn name(&self) -> &'static str {
        "parbs"
    }

    fn prepare(&mut self, _cycle: Cycle, buffer: &mut RequestBuffer) {
        if self.marked_waiting == 0 && !buffer.waiting().is_empty() {
            self.form_batch(buffer);
        }
    }

    fn rank(&self, entry: &BufferEntry) -> RankKey {
        if entry.marked {
            self.ranks.get(&entry.req.source).copied().unwrap_or(UNMARKED - 1)
        } else {
            UNMARKED
        }
    }

    fn on_issue(&mut self, entry: &BufferEntry, cmd: &DramCommand, _p: &DramTimingParams, _cycle: Cycle) {
        if cmd.kind.is_column() && entry.marked {
            self.marked_waiting -= 1;
        }
    }
}
