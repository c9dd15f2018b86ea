use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::run::ResultRow;
use super::Category;
use crate::error::{Error, Result};
use crate::sched::SchedulerKind;

/// Mean, min and max of the headline metrics over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub category: String,
    pub scheduler: SchedulerKind,
    pub sweep_parameter: String,
    pub sweep_value: String,
    pub seeds: usize,
    pub weighted_speedup_mean: f64,
    pub weighted_speedup_min: f64,
    pub weighted_speedup_max: f64,
    pub max_slowdown_mean: f64,
    pub max_slowdown_min: f64,
    pub max_slowdown_max: f64,
    pub cpu_weighted_speedup_mean: f64,
    pub cpu_weighted_speedup_min: f64,
    pub cpu_weighted_speedup_max: f64,
    pub gpu_speedup_mean: Option<f64>,
    pub gpu_speedup_min: Option<f64>,
    pub gpu_speedup_max: Option<f64>,
}

fn stats(v: &[f64]) -> (f64, f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

/// Groups rows by (category, scheduler, sweep point) in first-seen sweep
/// order, categories by intensity and schedulers in legend order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut value_order: Vec<&str> = Vec::new();
    for r in rows {
        if !value_order.contains(&r.sweep_value.as_str()) {
            value_order.push(&r.sweep_value);
        }
    }
    let cat_order = |c: &str| c.parse::<Category>().map_or(usize::MAX, Category::index);
    let mut groups: BTreeMap<(usize, String, SchedulerKind, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let v = value_order.iter().position(|&x| x == r.sweep_value).expect("recorded");
        groups
            .entry((cat_order(&r.category), r.category.clone(), r.scheduler, v))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let col = |f: fn(&ResultRow) -> f64| stats(&g.iter().map(|r| f(r)).collect::<Vec<_>>());
            let ws = col(|r| r.weighted_speedup);
            let ms = col(|r| r.max_slowdown);
            let cws = col(|r| r.cpu_weighted_speedup);
            let gpu: Vec<f64> = g.iter().filter_map(|r| r.gpu_speedup).collect();
            let gs = (!gpu.is_empty()).then(|| stats(&gpu));
            SummaryRow {
                category: g[0].category.clone(),
                scheduler: g[0].scheduler,
                sweep_parameter: g[0].sweep_parameter.clone(),
                sweep_value: g[0].sweep_value.clone(),
                seeds: g.len(),
                weighted_speedup_mean: ws.0,
                weighted_speedup_min: ws.1,
                weighted_speedup_max: ws.2,
                max_slowdown_mean: ms.0,
                max_slowdown_min: ms.1,
                max_slowdown_max: ms.2,
                cpu_weighted_speedup_mean: cws.0,
                cpu_weighted_speedup_min: cws.1,
                cpu_weighted_speedup_max: cws.2,
                gpu_speedup_mean: gs.map(|s| s.0),
                gpu_speedup_min: gs.map(|s| s.1),
                gpu_speedup_max: gs.map(|s| s.2),
            }
        })
        .collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
