//! Experiment driver: workload categories, scheduler comparisons, sweeps
//! and CSV output.

pub mod config;
pub mod report;
pub mod run;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sched::SourceKind;
use crate::workload::{IntensityClass, PresetLibrary, SourceSpec};

pub use config::{resolve_alias, ExperimentConfig, Sweep};
pub use report::{summarize, SummaryRow};
pub use run::{run_experiment, ExperimentResult, ResultRow, SourceRow};

/// Intensity mix of the CPU sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    L,
    ML,
    M,
    HL,
    HML,
    HM,
    H,
}

impl Category {
    /// Increasing memory intensity.
    pub const ALL: [Category; 7] = [
        Category::L,
        Category::ML,
        Category::M,
        Category::HL,
        Category::HML,
        Category::HM,
        Category::H,
    ];

    pub fn classes(self) -> &'static [IntensityClass] {
        use IntensityClass::*;
        match self {
            Category::L => &[Low],
            Category::ML => &[Low, Medium],
            Category::M => &[Medium],
            Category::HL => &[High, Low],
            Category::HML => &[High, Medium, Low],
            Category::HM => &[High, Medium],
            Category::H => &[High],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::L => "L",
            Category::ML => "ML",
            Category::M => "M",
            Category::HL => "HL",
            Category::HML => "HML",
            Category::HM => "HM",
            Category::H => "H",
        }
    }

    pub fn index(self) -> usize {
        Category::ALL.iter().position(|&c| c == self).expect("listed")
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown category '{s}' (expected L, ML, M, HL, HML, HM or H)")))
    }
}

/// SplitMix64 step, used to derive independent seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws `cpu_count` CPU presets from the category's classes plus one GPU
/// preset. Every class of the category appears at least once (when
/// `cpu_count` allows); the remaining CPUs pick a class uniformly. CPUs get
/// ids `0..cpu_count` in a shuffled order and the GPU gets `cpu_count`.
pub fn build_workload(category: Category, seed: u64, cpu_count: usize, lib: &PresetLibrary) -> Vec<SourceSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x574b_0000 + category.index() as u64));
    let classes = category.classes();
    let mut picks: Vec<IntensityClass> = classes.iter().copied().take(cpu_count).collect();
    while picks.len() < cpu_count {
        picks.push(classes[rng.random_range(0..classes.len())]);
    }
    picks.shuffle(&mut rng);
    let mut specs: Vec<SourceSpec> = picks
        .into_iter()
        .map(|class| {
            let pool = lib.cpu(class);
            pool[rng.random_range(0..pool.len())].clone()
        })
        .collect();
    let gpus = lib.gpu();
    specs.push(gpus[rng.random_range(0..gpus.len())].clone());
    for (i, s) in specs.iter_mut().enumerate() {
        s.source_id = i as u32;
    }
    specs
}

/// Intensity class of a source, `None` for GPUs.
pub fn class_of(spec: &SourceSpec) -> Option<IntensityClass> {
    (spec.kind == SourceKind::Cpu).then(|| IntensityClass::of(spec.intensity))
}
