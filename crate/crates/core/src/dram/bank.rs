use super::{Cycle, DramTimingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankStatus {
    Closed,
    Activating,
    Open,
    Precharging,
}

/// Row-buffer and timing history of one bank.
///
/// The stored row is whatever the last ACTIVATE latched; whether the bank is
/// still `Activating` or already `Open` (and likewise `Precharging` vs
/// `Closed`) is derived from the command timestamps at query time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BankState {
    row: Option<u32>,
    pub last_activate: Option<Cycle>,
    pub last_read: Option<Cycle>,
    pub last_write: Option<Cycle>,
    pub last_precharge: Option<Cycle>,
    /// Column commands served since the last ACTIVATE.
    pub(crate) columns_since_activate: u32,
}

impl BankState {
    pub fn status(&self, now: Cycle, params: &DramTimingParams) -> BankStatus {
        match self.row {
            Some(_) => match self.last_activate {
                Some(t) if now < t + params.t_rcd as u64 => BankStatus::Activating,
                _ => BankStatus::Open,
            },
            None => match self.last_precharge {
                Some(t) if now < t + params.t_rp as u64 => BankStatus::Precharging,
                _ => BankStatus::Closed,
            },
        }
    }

    /// Row held in the row buffer; `Some` only while the bank is `Open`.
    pub fn open_row(&self, now: Cycle, params: &DramTimingParams) -> Option<u32> {
        match self.status(now, params) {
            BankStatus::Open => self.row,
            _ => None,
        }
    }

    /// Row latched by the last ACTIVATE, whether or not tRCD has elapsed.
    pub fn latched_row(&self) -> Option<u32> {
        self.row
    }

    pub(crate) fn activate(&mut self, row: u32, now: Cycle) {
        self.row = Some(row);
        self.last_activate = Some(now);
        self.columns_since_activate = 0;
    }

    pub(crate) fn precharge(&mut self, now: Cycle) {
        self.row = None;
        self.last_precharge = Some(now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_timestamps() {
        let p = DramTimingParams::default();
        let mut b = BankState::default();
        assert_eq!(b.status(0, &p), BankStatus::Closed);
        b.activate(5, 0);
        assert_eq!(b.status(10, &p), BankStatus::Activating);
        assert_eq!(b.open_row(10, &p), None);
        assert_eq!(b.status(11, &p), BankStatus::Open);
        assert_eq!(b.open_row(11, &p), Some(5));
        b.precharge(40);
        assert_eq!(b.status(50, &p), BankStatus::Precharging);
        assert_eq!(b.status(51, &p), BankStatus::Closed);
        assert_eq!(b.open_row(51, &p), None);
    }
}
