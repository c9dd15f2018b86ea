//! Line-oriented trace files: `sourceId gap address R|W`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::{TraceRecord, WorkloadError};

pub fn write_trace<W: Write>(mut out: W, trace: &[TraceRecord]) -> io::Result<()> {
    for r in trace {
        writeln!(out, "{} {} {} {}", r.source, r.gap, r.address, if r.is_write { 'W' } else { 'R' })?;
    }
    out.flush()
}

pub fn save_trace(trace: &[TraceRecord], path: &Path) -> Result<(), WorkloadError> {
    let file = fs::File::create(path)?;
    write_trace(io::BufWriter::new(file), trace)?;
    Ok(())
}

/// Parses trace text; blank lines and `#` comments are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, WorkloadError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| WorkloadError::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [source, gap, address, op] = fields[..] else {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        };
        if gap.starts_with('-') {
            return Err(err(format!("negative gap {gap}")));
        }
        let source = source.parse().map_err(|_| err(format!("bad source id '{source}'")))?;
        let gap = gap.parse().map_err(|_| err(format!("bad gap '{gap}'")))?;
        let address = address.parse().map_err(|_| err(format!("bad address '{address}'")))?;
        let is_write = match op {
            "R" => false,
            "W" => true,
            other => return Err(err(format!("expected R or W, found '{other}'"))),
        };
        out.push(TraceRecord {
            source,
            gap,
            address,
            is_write,
        });
    }
    Ok(out)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>, WorkloadError> {
    parse_trace(&fs::read_to_string(path)?)
}
