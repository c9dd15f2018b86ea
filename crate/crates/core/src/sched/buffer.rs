use std::collections::HashMap;

use super::{MemoryRequest, SourceKind};
use crate::dram::command::RequestId;
use crate::dram::IssueOutcome;

#[derive(Debug)]
pub enum Admission {
    Accepted,
    /// Buffer space unavailable; the request goes back to its source.
    Stalled(MemoryRequest),
}

impl Admission {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Admission::Accepted)
    }
}

#[derive(Debug, Clone)]
pub struct BufferEntry {
    pub req: MemoryRequest,
    /// PAR-BS batch membership.
    pub marked: bool,
}

/// Centralized per-controller request buffer with a CPU-only reservation.
///
/// Issued requests keep their entry until their data transfer completes.
#[derive(Debug, Clone)]
pub struct RequestBuffer {
    capacity: usize,
    cpu_reserved: usize,
    waiting: Vec<BufferEntry>,
    issued: HashMap<RequestId, MemoryRequest>,
    gpu_occupancy: usize,
}

impl RequestBuffer {
    pub fn new(capacity: usize, cpu_reserved: usize) -> Self {
        assert!(cpu_reserved <= capacity, "reservation exceeds capacity");
        Self {
            capacity,
            cpu_reserved,
            waiting: Vec::with_capacity(capacity),
            issued: HashMap::new(),
            gpu_occupancy: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn occupancy(&self) -> usize {
        self.waiting.len() + self.issued.len()
    }

    pub fn gpu_occupancy(&self) -> usize {
        self.gpu_occupancy
    }

    /// CPU requests may use any free entry; GPU requests are limited to the
    /// unreserved part of the buffer.
    pub fn has_room_for(&self, kind: SourceKind) -> bool {
        match kind {
            SourceKind::Cpu => self.occupancy() < self.capacity,
            SourceKind::Gpu => {
                self.occupancy() < self.capacity
                    && self.gpu_occupancy < self.capacity - self.cpu_reserved
            }
        }
    }

    pub fn admit(&mut self, req: MemoryRequest) -> Admission {
        if !self.has_room_for(req.kind) {
            return Admission::Stalled(req);
        }
        if req.kind == SourceKind::Gpu {
            self.gpu_occupancy += 1;
        }
        self.waiting.push(BufferEntry { req, marked: false });
        Admission::Accepted
    }

    pub fn waiting(&self) -> &[BufferEntry] {
        &self.waiting
    }

    pub fn waiting_mut(&mut self) -> &mut [BufferEntry] {
        &mut self.waiting
    }

    pub fn find_waiting(&self, id: RequestId) -> Option<&BufferEntry> {
        self.waiting.iter().find(|e| e.req.id == id)
    }

    /// Moves a waiting request to the in-flight set after its column command.
    pub fn mark_issued(&mut self, id: RequestId, outcome: &IssueOutcome) -> Option<BufferEntry> {
        let pos = self.waiting.iter().position(|e| e.req.id == id)?;
        let mut entry = self.waiting.swap_remove(pos);
        entry.req.mark_issued(outcome);
        self.issued.insert(id, entry.req.clone());
        Some(entry)
    }

    pub fn complete(&mut self, id: RequestId, cycle: u64) -> Option<MemoryRequest> {
        let mut req = self.issued.remove(&id)?;
        req.mark_completed(cycle);
        if req.kind == SourceKind::Gpu {
            self.gpu_occupancy -= 1;
        }
        Some(req)
    }
}
