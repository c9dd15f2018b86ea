use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::{build_workload, class_of, mix_seed, Category};
use crate::error::{Error, Result};
use crate::metrics::{compute_report, MetricsReport, SourceRun};
use crate::sched::{SchedulerKind, SourceKind};
use crate::sim::{simulate, RunResult, SimOptions, SourceInput};
use crate::workload::{PresetLibrary, SourceSpec, TraceGenerator};

/// Debug recordings written next to each shared run.
#[derive(Debug, Clone, Copy, Default)]
pub struct HarnessOptions {
    pub command_log: bool,
    pub event_log: bool,
    pub sms_pick_trace: bool,
}

/// One `results.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub category: String,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub sweep_parameter: String,
    pub sweep_value: String,
    pub cpu_count: usize,
    pub channels: u32,
    pub sources: usize,
    pub total_cycles: u64,
    pub weighted_speedup: f64,
    pub max_slowdown: f64,
    pub cpu_weighted_speedup: f64,
    pub gpu_speedup: Option<f64>,
    pub run_id: String,
}

/// One `sources.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRow {
    pub run_id: String,
    pub source: u32,
    pub kind: SourceKind,
    pub preset: String,
    pub class: String,
    pub ipc_shared: f64,
    pub ipc_alone: f64,
    pub slowdown: f64,
    pub rbl_shared: f64,
    pub blp_shared: f64,
    pub rbl_alone: f64,
    pub blp_alone: f64,
    pub requests_shared: u64,
    pub requests_alone: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub sources: Vec<SourceRow>,
    /// Shared runs by run id, kept only when debug logs were requested.
    pub runs: BTreeMap<String, RunResult>,
}

#[derive(Debug, Clone)]
struct Workload {
    label: String,
    order: usize,
    specs: Vec<SourceSpec>,
}

#[derive(Debug, Clone)]
struct SharedJob {
    point: usize,
    workload: usize,
    seed: u64,
    scheduler: SchedulerKind,
    sweep_value: String,
    alone_key: String,
}

#[derive(Debug, Clone)]
struct Point {
    config: ExperimentConfig,
    sweep_value: String,
    workloads: Vec<Workload>,
}

fn sweep_applies(path: &str, scheduler: SchedulerKind) -> bool {
    match path.split('.').next() {
        Some("sms") => scheduler == SchedulerKind::Sms,
        Some("atlas") => scheduler == SchedulerKind::Atlas,
        Some("tcm") => scheduler == SchedulerKind::Tcm,
        _ => true,
    }
}

fn workloads_for(cfg: &ExperimentConfig) -> Vec<Workload> {
    let e = &cfg.experiment;
    if !e.sources.is_empty() {
        let mut specs = e.sources.clone();
        for (i, s) in specs.iter_mut().enumerate() {
            s.source_id = i as u32;
        }
        return vec![Workload {
            label: "custom".into(),
            order: Category::ALL.len(),
            specs,
        }];
    }
    // specs depend on the seed, so they are drawn per seed in `specs_for`
    e.categories
        .iter()
        .map(|c| Workload {
            label: c.as_str().into(),
            order: c.index(),
            specs: Vec::new(),
        })
        .collect()
}

fn specs_for(w: &Workload, seed: u64, cfg: &ExperimentConfig, lib: &PresetLibrary) -> Result<Vec<SourceSpec>> {
    if !w.specs.is_empty() {
        return Ok(w.specs.clone());
    }
    let cat: Category = w.label.parse()?;
    Ok(build_workload(cat, seed, cfg.experiment.cpu_count, lib))
}

/// Trace long enough to outlast the cycle budget when running alone.
fn inputs_for(specs: &[SourceSpec], seed: u64, label: &str, cfg: &ExperimentConfig) -> Result<Vec<SourceInput>> {
    let gen = TraceGenerator::new(cfg.dram, cfg.experiment.channels, cfg.core.issue_width);
    let budget = cfg.experiment.cycle_budget as f64;
    let label_seed = label.bytes().fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(b as u64));
    specs
        .iter()
        .map(|s| {
            let len = (budget * s.intensity / 1000.0 * 1.3) as usize + 2 * s.burst_len() as usize + 16;
            let trace = gen.generate(s, mix_seed(mix_seed(seed, label_seed), s.source_id as u64), len)?;
            Ok(SourceInput {
                kind: s.kind,
                window: s.max_outstanding,
                class: class_of(s),
                trace,
            })
        })
        .collect()
}

fn alone_key(cfg: &ExperimentConfig, label: &str, seed: u64) -> String {
    let sim = cfg.sim_config(SchedulerKind::Frfcfs, 0);
    format!(
        "{label}/{seed}/{}/{:?}/{}/{}/{}/{}/{}",
        cfg.experiment.cpu_count,
        sim.timing,
        sim.channels,
        sim.buffer_capacity,
        sim.cpu_reserved,
        sim.cycle_budget,
        sim.issue_width
    )
}

fn run_id(label: &str, seed: u64, scheduler: SchedulerKind, sweep: &str, value: &str) -> String {
    if value.is_empty() {
        format!("{label}-s{seed}-{scheduler}")
    } else {
        format!("{label}-s{seed}-{scheduler}-{sweep}={value}")
    }
}

fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// The configured preset library, or the built-in one.
pub fn library(cfg: &ExperimentConfig) -> Result<PresetLibrary> {
    Ok(match &cfg.experiment.preset_library {
        Some(p) => PresetLibrary::load(p)?,
        None => PresetLibrary::builtin(),
    })
}

/// Specs and traces exactly as [`execute`] builds them. `label` is a
/// category name, or `custom` for the explicit source list.
pub fn workload_inputs(cfg: &ExperimentConfig, label: &str, seed: u64) -> Result<(Vec<SourceSpec>, Vec<SourceInput>)> {
    let lib = library(cfg)?;
    let w = workloads_for(cfg)
        .into_iter()
        .find(|w| w.label == label)
        .or_else(|| {
            let cat: Category = label.parse().ok()?;
            Some(Workload { label: cat.as_str().into(), order: cat.index(), specs: Vec::new() })
        })
        .ok_or_else(|| Error::Config(format!("unknown workload '{label}'")))?;
    let specs = specs_for(&w, seed, cfg, &lib)?;
    let inputs = inputs_for(&specs, seed, &w.label, cfg)?;
    Ok((specs, inputs))
}

/// Runs every alone baseline and shared simulation of `cfg` and assembles
/// the sorted result rows.
pub fn execute(cfg: &ExperimentConfig, opts: HarnessOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    let lib = library(cfg)?;
    let sweep = cfg.experiment.sweep.clone();
    let sweep_path = sweep.as_ref().map(|s| s.path()).unwrap_or_default();
    let mut points = vec![Point {
        config: cfg.clone(),
        sweep_value: String::new(),
        workloads: workloads_for(cfg),
    }];
    if let Some(s) = &sweep {
        for v in &s.values {
            let mut c = cfg.with_value(&s.parameter, v.clone())?;
            c.experiment.sweep = None;
            points.push(Point {
                workloads: workloads_for(&c),
                config: c,
                sweep_value: value_label(v),
            });
        }
    }

    let mut jobs = Vec::new();
    for (pi, point) in points.iter().enumerate() {
        for &scheduler in &cfg.experiment.schedulers {
            let swept = sweep.is_some() && sweep_applies(&sweep_path, scheduler);
            // the base point serves schedulers the sweep does not touch
            if (pi == 0) == swept {
                continue;
            }
            for (wi, w) in point.workloads.iter().enumerate() {
                for &seed in &cfg.experiment.seeds {
                    jobs.push(SharedJob {
                        point: pi,
                        workload: wi,
                        seed,
                        scheduler,
                        sweep_value: point.sweep_value.clone(),
                        alone_key: alone_key(&point.config, &w.label, seed),
                    });
                }
            }
        }
    }

    let mut alone_jobs: BTreeMap<String, (usize, usize, u64)> = BTreeMap::new();
    for j in &jobs {
        alone_jobs.entry(j.alone_key.clone()).or_insert((j.point, j.workload, j.seed));
    }
    let alone_list: Vec<(String, (usize, usize, u64))> = alone_jobs.into_iter().collect();
    let alone_results: Vec<(String, Vec<SourceRun>)> = alone_list
        .par_iter()
        .map(|(key, (pi, wi, seed))| {
            let point = &points[*pi];
            let w = &point.workloads[*wi];
            let specs = specs_for(w, *seed, &point.config, &lib)?;
            let inputs = inputs_for(&specs, *seed, &w.label, &point.config)?;
            let sim = point.config.sim_config(SchedulerKind::Frfcfs, mix_seed(*seed, 0x534d_53));
            let mut runs = Vec::with_capacity(inputs.len());
            for (i, input) in inputs.into_iter().enumerate() {
                let r = simulate(&sim, std::slice::from_ref(&input), SimOptions::default()).map_err(sim_err)?;
                let mut run = r.sources[0].clone();
                run.source = i as u32;
                runs.push(run);
            }
            Ok((key.clone(), runs))
        })
        .collect::<Result<_>>()?;
    let alone: BTreeMap<String, Vec<SourceRun>> = alone_results.into_iter().collect();

    let keep_runs = opts.command_log || opts.event_log || opts.sms_pick_trace;
    let shared: Vec<(ResultRow, Vec<SourceRow>, usize, Option<RunResult>)> = jobs
        .par_iter()
        .map(|j| {
            let point = &points[j.point];
            let w = &point.workloads[j.workload];
            let specs = specs_for(w, j.seed, &point.config, &lib)?;
            let inputs = inputs_for(&specs, j.seed, &w.label, &point.config)?;
            let sim = point.config.sim_config(j.scheduler, mix_seed(j.seed, 0x534d_53));
            let sim_opts = SimOptions {
                command_log: opts.command_log,
                event_log: opts.event_log,
                sms_pick_trace: opts.sms_pick_trace,
                ..SimOptions::default()
            };
            let result = simulate(&sim, &inputs, sim_opts).map_err(sim_err)?;
            let base = &alone[&j.alone_key];
            let report = compute_report(&result.sources, base, result.cycles).map_err(|e| Error::Config(e.to_string()))?;
            let id = run_id(&w.label, j.seed, j.scheduler, &sweep_path, &j.sweep_value);
            let row = result_row(&point.config, &w.label, j, &sweep_path, &report, &id);
            let sources = source_rows(&id, &specs, &report, &result.sources, base);
            Ok((row, sources, w.order, keep_runs.then_some(result)))
        })
        .collect::<Result<_>>()?;

    let value_order = |v: &str| -> usize {
        points.iter().position(|p| p.sweep_value == v).unwrap_or(0)
    };
    let mut indexed: Vec<_> = shared.into_iter().collect();
    indexed.sort_by(|a, b| {
        let ka = (a.2, a.0.seed, a.0.scheduler, value_order(&a.0.sweep_value));
        let kb = (b.2, b.0.seed, b.0.scheduler, value_order(&b.0.sweep_value));
        ka.cmp(&kb)
    });
    let mut out = ExperimentResult::default();
    for (row, sources, _, run) in indexed {
        if let Some(r) = run {
            out.runs.insert(row.run_id.clone(), r);
        }
        out.rows.push(row);
        out.sources.extend(sources);
    }
    Ok(out)
}

fn sim_err(e: crate::sim::SimError) -> Error {
    match e {
        crate::sim::SimError::Config(m) => Error::Config(m),
        crate::sim::SimError::Dram(d) => Error::Dram(d),
    }
}

fn result_row(cfg: &ExperimentConfig, label: &str, j: &SharedJob, sweep: &str, r: &MetricsReport, id: &str) -> ResultRow {
    ResultRow {
        category: label.to_string(),
        seed: j.seed,
        scheduler: j.scheduler,
        sweep_parameter: if j.sweep_value.is_empty() { String::new() } else { sweep.to_string() },
        sweep_value: j.sweep_value.clone(),
        cpu_count: r.per_source.iter().filter(|m| m.kind == SourceKind::Cpu).count(),
        channels: cfg.experiment.channels,
        sources: r.per_source.len(),
        total_cycles: r.total_cycles,
        weighted_speedup: r.weighted_speedup,
        max_slowdown: r.max_slowdown,
        cpu_weighted_speedup: r.cpu_weighted_speedup,
        gpu_speedup: r.gpu_speedup,
        run_id: id.to_string(),
    }
}

fn source_rows(id: &str, specs: &[SourceSpec], r: &MetricsReport, shared: &[SourceRun], alone: &[SourceRun]) -> Vec<SourceRow> {
    r.per_source
        .iter()
        .zip(specs)
        .zip(shared.iter().zip(alone))
        .map(|((m, spec), (s, a))| SourceRow {
            run_id: id.to_string(),
            source: m.source,
            kind: m.kind,
            preset: spec.name.clone(),
            class: class_of(spec).map_or_else(|| "gpu".to_string(), |c| c.to_string()),
            ipc_shared: m.ipc_shared,
            ipc_alone: m.ipc_alone,
            slowdown: m.slowdown,
            rbl_shared: s.rbl,
            blp_shared: s.blp,
            rbl_alone: a.rbl,
            blp_alone: a.blp,
            requests_shared: s.requests,
            requests_alone: a.requests,
        })
        .collect()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Writes `results.csv`, `sources.csv`, the effective config and one
/// directory per row under `runs/`.
pub fn write_outputs(cfg: &ExperimentConfig, result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_csv(&dir.join("results.csv"), &result.rows)?;
    write_csv(&dir.join("sources.csv"), &result.sources)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()).map_err(|e| io_err(dir, e))?;
    for row in &result.rows {
        let run_dir = dir.join("runs").join(&row.run_id);
        fs::create_dir_all(&run_dir).map_err(|e| io_err(&run_dir, e))?;
        write_csv(&run_dir.join("result.csv"), std::slice::from_ref(row))?;
        let srcs: Vec<&SourceRow> = result.sources.iter().filter(|s| s.run_id == row.run_id).collect();
        write_csv(&run_dir.join("sources.csv"), &srcs)?;
        if let Some(run) = result.runs.get(&row.run_id) {
            write_logs(run, &run_dir)?;
        }
    }
    Ok(())
}

fn write_logs(run: &RunResult, dir: &Path) -> Result<()> {
    let write_lines = |name: &str, lines: &mut dyn Iterator<Item = String>| -> Result<()> {
        let path = dir.join(name);
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for l in lines {
            writeln!(w, "{l}").map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))
    };
    if !run.command_log.is_empty() {
        write_lines("commands.log", &mut run.command_log.iter().map(|r| r.to_string()))?;
    }
    if !run.events.is_empty() {
        write_lines("events.log", &mut run.events.iter().map(|e| e.to_string()))?;
    }
    if !run.sms_picks.is_empty() {
        write_lines(
            "sms_picks.log",
            &mut run.sms_picks.iter().enumerate().flat_map(|(ch, picks)| {
                picks.iter().map(move |p| format!("{} {ch} {:?} {}", p.cycle, p.policy, p.source))
            }),
        )?;
    }
    Ok(())
}

/// [`execute`] followed by [`write_outputs`] into the configured directory.
pub fn run_experiment(cfg: &ExperimentConfig, opts: HarnessOptions) -> Result<ExperimentResult> {
    let result = execute(cfg, opts)?;
    write_outputs(cfg, &result, &cfg.experiment.output_dir)?;
    Ok(result)
}
