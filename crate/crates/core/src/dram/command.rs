use std::fmt;
use std::str::FromStr;

use super::Cycle;

pub type RequestId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CommandKind {
    Activate,
    Precharge,
    Read,
    Write,
}

impl CommandKind {
    pub fn is_column(self) -> bool {
        matches!(self, CommandKind::Read | CommandKind::Write)
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            CommandKind::Activate => "ACT",
            CommandKind::Precharge => "PRE",
            CommandKind::Read => "RD",
            CommandKind::Write => "WR",
        }
    }
}

/// A low-level DRAM command. `row` is present only for ACTIVATE and
/// `column` only for READ/WRITE; the constructors enforce this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DramCommand {
    pub kind: CommandKind,
    pub channel: u32,
    pub bank: u32,
    pub row: Option<u32>,
    pub column: Option<u32>,
    pub request: Option<RequestId>,
}

impl DramCommand {
    pub fn activate(channel: u32, bank: u32, row: u32) -> Self {
        Self {
            kind: CommandKind::Activate,
            channel,
            bank,
            row: Some(row),
            column: None,
            request: None,
        }
    }

    pub fn precharge(channel: u32, bank: u32) -> Self {
        Self {
            kind: CommandKind::Precharge,
            channel,
            bank,
            row: None,
            column: None,
            request: None,
        }
    }

    pub fn read(channel: u32, bank: u32, column: u32) -> Self {
        Self {
            kind: CommandKind::Read,
            channel,
            bank,
            row: None,
            column: Some(column),
            request: None,
        }
    }

    pub fn write(channel: u32, bank: u32, column: u32) -> Self {
        Self {
            kind: CommandKind::Write,
            ..Self::read(channel, bank, column)
        }
    }

    pub fn column_access(is_write: bool, channel: u32, bank: u32, column: u32) -> Self {
        if is_write {
            Self::write(channel, bank, column)
        } else {
            Self::read(channel, bank, column)
        }
    }

    pub fn for_request(mut self, id: RequestId) -> Self {
        self.request = Some(id);
        self
    }

    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            CommandKind::Activate => self.row.is_some() && self.column.is_none(),
            CommandKind::Precharge => self.row.is_none() && self.column.is_none(),
            CommandKind::Read | CommandKind::Write => self.row.is_none() && self.column.is_some(),
        }
    }
}

impl fmt::Display for DramCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ch{} b{}", self.kind.mnemonic(), self.channel, self.bank)?;
        if let Some(r) = self.row {
            write!(f, " row{r}")?;
        }
        if let Some(c) = self.column {
            write!(f, " col{c}")?;
        }
        if let Some(id) = self.request {
            write!(f, " req{id}")?;
        }
        Ok(())
    }
}

/// One line of the command log: `cycle KIND channel bank arg request`,
/// where `arg` is the row for ACT, the column for RD/WR and `-` for PRE,
/// and `request` is `-` when the command is not linked to a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommandRecord {
    pub cycle: Cycle,
    pub command: DramCommand,
}

impl fmt::Display for CommandRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.command;
        write!(f, "{} {} {} {} ", self.cycle, c.kind.mnemonic(), c.channel, c.bank)?;
        match (c.row, c.column) {
            (Some(r), _) => write!(f, "{r}")?,
            (None, Some(col)) => write!(f, "{col}")?,
            (None, None) => f.write_str("-")?,
        }
        match c.request {
            Some(id) => write!(f, " {id}"),
            None => f.write_str(" -"),
        }
    }
}

impl FromStr for CommandRecord {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(format!("expected 6 fields, found {}", fields.len()));
        }
        let num = |s: &str, what: &str| -> Result<u64, String> {
            s.parse::<u64>().map_err(|_| format!("bad {what} '{s}'"))
        };
        let cycle = num(fields[0], "cycle")?;
        let channel = num(fields[2], "channel")? as u32;
        let bank = num(fields[3], "bank")? as u32;
        let arg = if fields[4] == "-" {
            None
        } else {
            Some(num(fields[4], "row/column")? as u32)
        };
        let request = if fields[5] == "-" {
            None
        } else {
            Some(num(fields[5], "request id")?)
        };
        let command = match (fields[1], arg) {
            ("ACT", Some(row)) => DramCommand::activate(channel, bank, row),
            ("PRE", None) => DramCommand::precharge(channel, bank),
            ("RD", Some(col)) => DramCommand::read(channel, bank, col),
            ("WR", Some(col)) => DramCommand::write(channel, bank, col),
            (kind, _) => return Err(format!("malformed {kind} command")),
        };
        Ok(CommandRecord {
            cycle,
            command: DramCommand { request, ..command },
        })
    }
}
