use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use super::{SourceSpec, WorkloadError};
use crate::sched::SourceKind;

const BUILTIN: &str = include_str!("../../presets/library.toml");

/// Upper bound (exclusive) of the Low class, requests per kilocycle.
pub const LOW_MAX: f64 = 5.0;
/// Upper bound (inclusive) of the Medium class.
pub const MEDIUM_MAX: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntensityClass {
    Low,
    Medium,
    High,
}

impl IntensityClass {
    pub fn of(intensity: f64) -> Self {
        if intensity < LOW_MAX {
            IntensityClass::Low
        } else if intensity <= MEDIUM_MAX {
            IntensityClass::Medium
        } else {
            IntensityClass::High
        }
    }
}

impl fmt::Display for IntensityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntensityClass::Low => "low",
            IntensityClass::Medium => "medium",
            IntensityClass::High => "high",
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryFile {
    preset: Vec<SourceSpec>,
}

#[derive(Debug, Clone)]
pub struct PresetLibrary {
    presets: Vec<SourceSpec>,
}

impl PresetLibrary {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("built-in preset library is valid")
    }

    pub fn load(path: &Path) -> Result<Self, WorkloadError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Parses and checks a library: unique names, valid specs, at least one
    /// preset per CPU class and a GPU preset, and every GPU more intensive
    /// than every CPU.
    pub fn from_toml(text: &str) -> Result<Self, WorkloadError> {
        let file: LibraryFile = toml::from_str(text).map_err(|e| WorkloadError::Preset(e.to_string()))?;
        let mut names = HashSet::new();
        for p in &file.preset {
            if !names.insert(p.name.as_str()) {
                return Err(WorkloadError::Preset(format!("duplicate preset '{}'", p.name)));
            }
            p.validate(crate::dram::DramTimingParams::default().banks_per_channel)?;
        }
        let lib = Self { presets: file.preset };
        for class in [IntensityClass::Low, IntensityClass::Medium, IntensityClass::High] {
            if lib.cpu(class).is_empty() {
                return Err(WorkloadError::Preset(format!("no {class} CPU preset")));
            }
        }
        if lib.gpu().is_empty() {
            return Err(WorkloadError::Preset("no GPU preset".into()));
        }
        let cpu_max = lib.cpu(IntensityClass::High).iter().map(|p| p.intensity).fold(0.0, f64::max);
        if let Some(g) = lib.gpu().iter().find(|g| g.intensity <= cpu_max) {
            return Err(WorkloadError::Preset(format!(
                "GPU preset '{}' ({}) is not more intensive than every CPU preset ({cpu_max})",
                g.name, g.intensity
            )));
        }
        Ok(lib)
    }

    pub fn all(&self) -> &[SourceSpec] {
        &self.presets
    }

    pub fn get(&self, name: &str) -> Option<&SourceSpec> {
        self.presets.iter().find(|p| p.name == name)
    }

    pub fn cpu(&self, class: IntensityClass) -> Vec<&SourceSpec> {
        self.presets
            .iter()
            .filter(|p| p.kind == SourceKind::Cpu && IntensityClass::of(p.intensity) == class)
            .collect()
    }

    pub fn gpu(&self) -> Vec<&SourceSpec> {
        self.presets.iter().filter(|p| p.kind == SourceKind::Gpu).collect()
    }
}
