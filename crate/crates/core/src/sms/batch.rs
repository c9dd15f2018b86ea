use std::collections::VecDeque;

use crate::dram::Cycle;
use crate::sched::{Admission, MemoryRequest, SourceId};

/// Same-source, same-row run of requests formed in stage 1.
#[derive(Debug, Clone)]
pub struct Batch {
    pub id: u64,
    pub source: SourceId,
    pub channel: u32,
    pub bank: u32,
    pub row: u32,
    pub requests: VecDeque<MemoryRequest>,
    ready: bool,
    pub oldest_arrival: Cycle,
}

impl Batch {
    fn start(id: u64, req: MemoryRequest) -> Self {
        Self {
            id,
            source: req.source,
            channel: req.loc.channel,
            bank: req.loc.bank,
            row: req.loc.row,
            oldest_arrival: req.arrival,
            requests: VecDeque::from([req]),
            ready: false,
        }
    }

    pub fn is_ready(&self) -> bool {
        self.ready
    }

    fn accepts(&self, req: &MemoryRequest) -> bool {
        !self.ready
            && req.loc.channel == self.channel
            && req.loc.bank == self.bank
            && req.loc.row == self.row
    }

    fn set_ready(&mut self) -> bool {
        let newly = !self.ready;
        self.ready = true;
        newly
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Every request shares the batch's source and (channel, bank, row).
    pub fn is_homogeneous(&self) -> bool {
        self.requests.iter().all(|r| {
            r.source == self.source
                && r.loc.channel == self.channel
                && r.loc.bank == self.bank
                && r.loc.row == self.row
        })
    }
}

/// Per-source batch-formation FIFO. Only the newest batch can still grow.
#[derive(Debug, Clone)]
pub struct FormationFifo {
    pub source: SourceId,
    capacity: usize,
    age_threshold: Cycle,
    batches: VecDeque<Batch>,
    len: usize,
}

impl FormationFifo {
    pub fn new(source: SourceId, capacity: usize, age_threshold: Cycle) -> Self {
        assert!(capacity >= 1);
        Self {
            source,
            capacity,
            age_threshold,
            batches: VecDeque::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len >= self.capacity
    }

    pub fn batches(&self) -> impl Iterator<Item = &Batch> {
        self.batches.iter()
    }

    /// Appends to the newest batch when it is still open and targets the
    /// same row; otherwise closes it (marks it ready) and starts a new batch.
    /// A full FIFO closes its newest batch and stalls the request.
    pub fn insert(&mut self, req: MemoryRequest, next_batch_id: &mut u64) -> Admission {
        if self.is_full() {
            if let Some(b) = self.batches.back_mut() {
                b.set_ready();
            }
            return Admission::Stalled(req);
        }
        match self.batches.back_mut() {
            Some(b) if b.accepts(&req) => b.requests.push_back(req),
            newest => {
                if let Some(b) = newest {
                    b.set_ready();
                }
                self.batches.push_back(Batch::start(*next_batch_id, req));
                *next_batch_id += 1;
            }
        }
        self.len += 1;
        Admission::Accepted
    }

    /// Applies the age and full-FIFO readiness triggers; returns the number
    /// of batches that became ready.
    pub fn tick(&mut self, cycle: Cycle) -> usize {
        let full = self.is_full();
        let threshold = self.age_threshold;
        match self.batches.back_mut() {
            Some(b) if full || b.oldest_arrival + threshold <= cycle => usize::from(b.set_ready()),
            _ => 0,
        }
    }

    /// Oldest ready batch, which is always the front one.
    pub fn oldest_ready(&self) -> Option<&Batch> {
        self.batches.front().filter(|b| b.is_ready())
    }

    pub fn has_ready(&self) -> bool {
        self.oldest_ready().is_some()
    }

    pub fn front(&self) -> Option<&Batch> {
        self.batches.front()
    }

    /// Removes the next request of the front batch; drops the batch once
    /// empty. Returns the request with its batch id and whether the batch is
    /// now fully drained.
    pub(crate) fn pop_front_request(&mut self) -> Option<(MemoryRequest, u64, bool)> {
        let batch = self.batches.front_mut()?;
        let req = batch.requests.pop_front()?;
        let id = batch.id;
        self.len -= 1;
        let done = batch.requests.is_empty();
        if done {
            self.batches.pop_front();
        }
        Some((req, id, done))
    }
}
