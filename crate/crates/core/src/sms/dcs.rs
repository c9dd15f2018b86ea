use std::collections::VecDeque;

use crate::dram::{Channel, Cycle, DramCommand};
use crate::sched::{next_command_for, MemoryRequest};

/// Per-bank FIFO of stage 3. Entries carry their batch id.
#[derive(Debug, Clone)]
pub struct DcsFifo {
    pub bank: u32,
    capacity: usize,
    queue: VecDeque<(MemoryRequest, u64)>,
}

impl DcsFifo {
    pub fn new(bank: u32, capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            bank,
            capacity,
            queue: VecDeque::with_capacity(capacity),
        }
    }

    pub fn has_space(&self) -> bool {
        self.queue.len() < self.capacity
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn head(&self) -> Option<&MemoryRequest> {
        self.queue.front().map(|(r, _)| r)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MemoryRequest, u64)> {
        self.queue.iter().map(|(r, b)| (r, *b))
    }

    pub(crate) fn push(&mut self, req: MemoryRequest, batch: u64) {
        debug_assert!(self.has_space());
        self.queue.push_back((req, batch));
    }

    pub(crate) fn pop(&mut self) -> Option<MemoryRequest> {
        self.queue.pop_front().map(|(r, _)| r)
    }

    /// Requests of one batch occupy consecutive positions.
    pub fn is_contiguous(&self) -> bool {
        let mut closed: Vec<u64> = Vec::new();
        let mut current: Option<u64> = None;
        for &(_, b) in &self.queue {
            if current != Some(b) {
                if closed.contains(&b) {
                    return false;
                }
                if let Some(c) = current {
                    closed.push(c);
                }
                current = Some(b);
            }
        }
        true
    }
}

/// Stage-3 command scheduler: looks only at FIFO heads and arbitrates among
/// issuable heads round-robin over banks.
#[derive(Debug, Clone)]
pub struct Dcs {
    fifos: Vec<DcsFifo>,
    cursor: usize,
}

impl Dcs {
    pub fn new(banks: u32, capacity: usize) -> Self {
        Self {
            fifos: (0..banks).map(|b| DcsFifo::new(b, capacity)).collect(),
            cursor: 0,
        }
    }

    pub fn fifo(&self, bank: u32) -> &DcsFifo {
        &self.fifos[bank as usize]
    }

    pub(crate) fn fifo_mut(&mut self, bank: u32) -> &mut DcsFifo {
        &mut self.fifos[bank as usize]
    }

    pub fn fifos(&self) -> &[DcsFifo] {
        &self.fifos
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn set_cursor(&mut self, cursor: usize) {
        self.cursor = cursor % self.fifos.len();
    }

    pub fn len(&self) -> usize {
        self.fifos.iter().map(DcsFifo::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fifos.iter().all(DcsFifo::is_empty)
    }

    /// Picks the first issuable head command starting from the cursor and
    /// moves the cursor past the chosen bank.
    pub fn pick(&mut self, channel: &Channel, cycle: Cycle) -> Option<DramCommand> {
        let n = self.fifos.len();
        for k in 0..n {
            let b = (self.cursor + k) % n;
            let Some(head) = self.fifos[b].head() else { continue };
            let cmd = next_command_for(head, channel);
            if channel.can_issue(&cmd, cycle) {
                self.cursor = (b + 1) % n;
                return Some(cmd);
            }
        }
        None
    }
}
