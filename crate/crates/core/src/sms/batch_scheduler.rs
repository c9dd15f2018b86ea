use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::batch::FormationFifo;
use super::dcs::Dcs;
use crate::dram::Cycle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PickPolicy {
    ShortestJobFirst,
    RoundRobin,
}

/// One stage-2 decision, kept when the draw trace is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PickRecord {
    pub cycle: Cycle,
    pub policy: PickPolicy,
    /// Index of the chosen source FIFO.
    pub source: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrainStep {
    /// Nothing selected.
    Idle,
    /// Destination bank FIFO full this cycle.
    Stalled,
    Moved { done: bool },
}

/// Stage 2: picks one ready batch at a time (SJF with probability `p`,
/// otherwise round-robin) and drains it into the bank FIFOs, one request
/// per cycle.
#[derive(Debug, Clone)]
pub struct BatchScheduler {
    p: f64,
    rng: ChaCha8Rng,
    cursor: usize,
    draining: Option<usize>,
    trace: Option<Vec<PickRecord>>,
}

impl BatchScheduler {
    pub fn new(p: f64, seed: u64) -> Self {
        Self {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cursor: 0,
            draining: None,
            trace: None,
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[PickRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn take_trace(&mut self) -> Vec<PickRecord> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn draining(&self) -> Option<usize> {
        self.draining
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Selects a source whose oldest ready batch will be drained next.
    /// `in_flight[i]` is source `i`'s request count across all stages.
    pub fn pick(&mut self, fifos: &[FormationFifo], in_flight: &[usize], cycle: Cycle) -> Option<usize> {
        assert!(self.draining.is_none(), "pick while draining");
        let n = fifos.len();
        if !fifos.iter().any(FormationFifo::has_ready) {
            return None;
        }
        let sjf = self.rng.random::<f64>() < self.p;
        let chosen = if sjf {
            (0..n)
                .filter(|&i| fifos[i].has_ready())
                .min_by_key(|&i| (in_flight[i], i))
        } else {
            let found = (0..n)
                .map(|k| (self.cursor + k) % n)
                .find(|&i| fifos[i].has_ready());
            if let Some(i) = found {
                self.cursor = (i + 1) % n;
            }
            found
        }?;
        if let Some(t) = self.trace.as_mut() {
            t.push(PickRecord {
                cycle,
                policy: if sjf {
                    PickPolicy::ShortestJobFirst
                } else {
                    PickPolicy::RoundRobin
                },
                source: chosen,
            });
        }
        self.draining = Some(chosen);
        Some(chosen)
    }

    /// Moves one request of the selected batch into its bank FIFO.
    pub fn drain_step(&mut self, fifos: &mut [FormationFifo], dcs: &mut Dcs) -> DrainStep {
        let Some(src) = self.draining else {
            return DrainStep::Idle;
        };
        let fifo = &mut fifos[src];
        let bank = fifo.front().expect("draining batch present").bank;
        if !dcs.fifo(bank).has_space() {
            return DrainStep::Stalled;
        }
        let (req, batch_id, done) = fifo.pop_front_request().expect("draining batch non-empty");
        dcs.fifo_mut(bank).push(req, batch_id);
        if done {
            self.draining = None;
        }
        DrainStep::Moved { done }
    }
}
