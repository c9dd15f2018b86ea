//! DRAM device model: timing parameters, address mapping, per-bank state and
//! the per-channel command/timing engine.

pub mod bank;
pub mod channel;
pub mod command;
pub mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bank::{BankState, BankStatus};
pub use channel::{Channel, IssueOutcome};
pub use command::{CommandKind, CommandRecord, DramCommand};
pub use validate::{validate_log, Validator, Violation};

/// Simulation time in memory-controller clock cycles.
pub type Cycle = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DramError {
    #[error("address {addr} out of range (address space holds {limit} blocks)")]
    AddressOutOfRange { addr: u64, limit: u64 },
    #[error("invalid timing parameters: {0}")]
    InvalidTiming(String),
    #[error("protocol violation at cycle {cycle}: {command} ({reason})")]
    ProtocolViolation {
        cycle: Cycle,
        command: String,
        reason: String,
    },
}

/// Device timing constants (in cycles) and per-channel geometry.
///
/// Defaults are a DDR3-1600-class part with 8 banks per channel, 32K rows
/// per bank and 128 cache blocks per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DramTimingParams {
    pub t_rcd: u32,
    pub t_rp: u32,
    pub t_ras: u32,
    pub t_rc: u32,
    pub t_cl: u32,
    pub t_cwl: u32,
    pub t_ccd: u32,
    pub t_rrd: u32,
    pub t_faw: u32,
    pub t_wtr: u32,
    pub t_rtp: u32,
    /// Data-bus occupancy of one transfer.
    pub burst_cycles: u32,
    pub banks_per_channel: u32,
    pub rows_per_bank: u32,
    pub columns_per_row: u32,
}

impl Default for DramTimingParams {
    fn default() -> Self {
        Self {
            t_rcd: 11,
            t_rp: 11,
            t_ras: 28,
            t_rc: 39,
            t_cl: 11,
            t_cwl: 8,
            t_ccd: 4,
            t_rrd: 5,
            t_faw: 24,
            t_wtr: 6,
            t_rtp: 6,
            burst_cycles: 4,
            banks_per_channel: 8,
            rows_per_bank: 32768,
            columns_per_row: 128,
        }
    }
}

impl DramTimingParams {
    pub fn validate(&self) -> Result<(), DramError> {
        let named = [
            ("t_rcd", self.t_rcd),
            ("t_rp", self.t_rp),
            ("t_ras", self.t_ras),
            ("t_rc", self.t_rc),
            ("t_cl", self.t_cl),
            ("t_cwl", self.t_cwl),
            ("t_ccd", self.t_ccd),
            ("t_rrd", self.t_rrd),
            ("t_faw", self.t_faw),
            ("t_wtr", self.t_wtr),
            ("t_rtp", self.t_rtp),
            ("burst_cycles", self.burst_cycles),
            ("banks_per_channel", self.banks_per_channel),
            ("rows_per_bank", self.rows_per_bank),
            ("columns_per_row", self.columns_per_row),
        ];
        if let Some((name, _)) = named.iter().find(|(_, v)| *v == 0) {
            return Err(DramError::InvalidTiming(format!("{name} must be positive")));
        }
        if self.t_rc < self.t_ras + self.t_rp {
            return Err(DramError::InvalidTiming(format!(
                "t_rc ({}) < t_ras + t_rp ({})",
                self.t_rc,
                self.t_ras + self.t_rp
            )));
        }
        if self.t_faw < self.t_rrd {
            return Err(DramError::InvalidTiming(format!(
                "t_faw ({}) < t_rrd ({})",
                self.t_faw, self.t_rrd
            )));
        }
        Ok(())
    }

    pub fn geometry(&self, channels: u32) -> Geometry {
        Geometry {
            channels,
            banks: self.banks_per_channel,
            rows: self.rows_per_bank,
            columns: self.columns_per_row,
        }
    }

    /// Longest distance (in cycles) over which any pairwise command rule applies.
    pub(crate) fn max_constraint_span(&self) -> u64 {
        [
            self.t_rc,
            self.t_faw,
            self.t_ras,
            self.t_rp,
            self.t_rcd,
            self.t_ccd,
            self.t_rrd,
            self.t_wtr,
            self.t_rtp,
            self.t_cl.max(self.t_cwl) + self.burst_cycles,
        ]
        .into_iter()
        .max()
        .unwrap_or(0) as u64
    }
}

/// Address-space shape: channels × banks × rows × columns cache blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub channels: u32,
    pub banks: u32,
    pub rows: u32,
    pub columns: u32,
}

impl Geometry {
    pub fn capacity(&self) -> u64 {
        self.channels as u64 * self.banks as u64 * self.rows as u64 * self.columns as u64
    }

    pub fn total_banks(&self) -> usize {
        (self.channels * self.banks) as usize
    }
}

/// A decoded block address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub channel: u32,
    pub bank: u32,
    pub row: u32,
    pub column: u32,
}

impl Location {
    /// Index of this location's bank across all channels.
    pub fn global_bank(&self, banks_per_channel: u32) -> usize {
        (self.channel * banks_per_channel + self.bank) as usize
    }
}

/// Row-interleaved mapping: consecutive block addresses walk columns, then
/// banks, then rows, then channels.
pub fn decode_address(addr: u64, geometry: &Geometry) -> Result<Location, DramError> {
    let limit = geometry.capacity();
    if addr >= limit {
        return Err(DramError::AddressOutOfRange { addr, limit });
    }
    let columns = geometry.columns as u64;
    let banks = geometry.banks as u64;
    let rows = geometry.rows as u64;
    let column = addr % columns;
    let rest = addr / columns;
    let bank = rest % banks;
    let rest = rest / banks;
    let row = rest % rows;
    let channel = rest / rows;
    Ok(Location {
        channel: channel as u32,
        bank: bank as u32,
        row: row as u32,
        column: column as u32,
    })
}

/// Inverse of [`decode_address`].
pub fn encode_address(loc: &Location, geometry: &Geometry) -> Result<u64, DramError> {
    if loc.channel >= geometry.channels
        || loc.bank >= geometry.banks
        || loc.row >= geometry.rows
        || loc.column >= geometry.columns
    {
        return Err(DramError::AddressOutOfRange {
            addr: u64::MAX,
            limit: geometry.capacity(),
        });
    }
    let mut addr = loc.channel as u64;
    addr = addr * geometry.rows as u64 + loc.row as u64;
    addr = addr * geometry.banks as u64 + loc.bank as u64;
    addr = addr * geometry.columns as u64 + loc.column as u64;
    Ok(addr)
}
