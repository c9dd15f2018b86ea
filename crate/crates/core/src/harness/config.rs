use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Category;
use crate::dram::{Cycle, DramTimingParams};
use crate::error::{Error, Result};
use crate::sched::{AtlasConfig, SchedulerKind, TcmConfig};
use crate::sim::SimConfig;
use crate::sms::SmsConfig;
use crate::workload::SourceSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub schedulers: Vec<SchedulerKind>,
    pub categories: Vec<Category>,
    /// Explicit source list used instead of the categories when given.
    pub sources: Vec<SourceSpec>,
    /// Preset library replacing the built-in one.
    pub preset_library: Option<PathBuf>,
    pub cpu_count: usize,
    pub channels: u32,
    pub buffer_capacity: usize,
    pub cpu_reserved: usize,
    pub cycle_budget: Cycle,
    pub seeds: Vec<u64>,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            schedulers: SchedulerKind::ALL.to_vec(),
            categories: Category::ALL.to_vec(),
            sources: Vec::new(),
            preset_library: None,
            cpu_count: 16,
            channels: 4,
            buffer_capacity: 300,
            cpu_reserved: 150,
            cycle_budget: 1_000_000,
            seeds: vec![1, 2, 3],
            sweep: None,
            output_dir: PathBuf::from("results"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Dotted config path (`sms.p`) or one of the aliases `p`, `channels`,
    /// `cpu_count`, `cores`.
    pub parameter: String,
    pub values: Vec<toml::Value>,
}

impl Sweep {
    pub fn path(&self) -> String {
        resolve_alias(&self.parameter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoreSection {
    pub issue_width: u32,
}

impl Default for CoreSection {
    fn default() -> Self {
        Self { issue_width: 3 }
    }
}

/// Full experiment description, one section per module.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub dram: DramTimingParams,
    pub sms: SmsConfig,
    pub atlas: AtlasConfig,
    pub tcm: TcmConfig,
    pub core: CoreSection,
}

pub fn resolve_alias(name: &str) -> String {
    match name {
        "p" => "sms.p".into(),
        "channels" => "experiment.channels".into(),
        "cpu_count" | "cores" => "experiment.cpu_count".into(),
        other => other.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Returns a copy with `path` (dotted, aliases allowed) set to `value`.
    pub fn with_value(&self, path: &str, value: toml::Value) -> Result<Self> {
        let path = resolve_alias(path);
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let missing = || Error::Config(format!("'{path}' does not name a config field"));
        let (parents, leaf) = match path.rsplit_once('.') {
            Some((p, l)) => (p.split('.').collect::<Vec<_>>(), l),
            None => (Vec::new(), path.as_str()),
        };
        let mut node = &mut root;
        for part in parents {
            node = node.as_table_mut().and_then(|t| t.get_mut(part)).ok_or_else(missing)?;
        }
        let table = node.as_table_mut().ok_or_else(missing)?;
        match table.get_mut(leaf) {
            Some(slot) => *slot = coerce(slot, value),
            // unset optional field; unknown names are rejected on conversion
            None => {
                table.insert(leaf.to_string(), value);
            }
        }
        root.try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("'{path}' does not name a config field or has the wrong type: {e}")))
    }

    /// Applies a `key=value` override; the value is parsed as a TOML value
    /// and falls back to a bare string.
    pub fn apply_override(&self, assignment: &str) -> Result<Self> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        let value = parse_value(raw.trim());
        self.with_value(key.trim(), value)
    }

    pub fn sim_config(&self, scheduler: SchedulerKind, seed: u64) -> SimConfig {
        let e = &self.experiment;
        SimConfig {
            timing: self.dram,
            channels: e.channels,
            buffer_capacity: e.buffer_capacity,
            cpu_reserved: e.cpu_reserved,
            cycle_budget: e.cycle_budget,
            issue_width: self.core.issue_width,
            scheduler,
            sms: self.sms,
            atlas: self.atlas,
            tcm: self.tcm,
            seed,
        }
    }

    pub fn source_count(&self) -> usize {
        if self.experiment.sources.is_empty() {
            self.experiment.cpu_count + 1
        } else {
            self.experiment.sources.len()
        }
    }

    /// Checks everything that can be checked before running, including each
    /// sweep point.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds must not be empty".into()));
        }
        if e.schedulers.is_empty() {
            return Err(Error::Config("experiment.schedulers must not be empty".into()));
        }
        if e.sources.is_empty() && e.categories.is_empty() {
            return Err(Error::Config("need experiment.categories or experiment.sources".into()));
        }
        if e.sources.is_empty() && e.cpu_count == 0 {
            return Err(Error::Config("experiment.cpu_count must be at least 1".into()));
        }
        self.sim_config(SchedulerKind::Frfcfs, 0)
            .validate(self.source_count())
            .map_err(Error::Config)?;
        for s in &e.sources {
            s.validate(self.dram.banks_per_channel)?;
        }
        if let Some(sweep) = &e.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep.values must not be empty".into()));
            }
            if sweep.path().starts_with("experiment.sweep") {
                return Err(Error::Config("cannot sweep the sweep itself".into()));
            }
            for v in &sweep.values {
                let point = self.with_value(&sweep.parameter, v.clone())?;
                let mut inner = point.clone();
                inner.experiment.sweep = None;
                inner.validate()?;
            }
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Lets integer literals land in float fields and whole floats in integer
/// fields.
fn coerce(current: &toml::Value, value: toml::Value) -> toml::Value {
    match (current, &value) {
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
        (toml::Value::Integer(_), toml::Value::Float(f)) if f.fract() == 0.0 => toml::Value::Integer(*f as i64),
        _ => value,
    }
}
