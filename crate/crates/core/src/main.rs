use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use memsched::dram::{validate_log, CommandRecord};
use memsched::harness::report::{read_results, write_summary};
use memsched::harness::run::{library, run_experiment, workload_inputs, HarnessOptions};
use memsched::harness::{summarize, ExperimentConfig};
use memsched::workload::save_trace;

#[derive(Parser)]
#[command(name = "memsched", version, about = "Shared-DRAM CPU-GPU memory scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set sms.p=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        for o in &self.overrides {
            cfg = cfg.apply_override(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write its CSVs.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (overrides `experiment.output_dir`).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Write and protocol-check each run's DRAM command log.
        #[arg(long)]
        dump_commands: bool,
        /// Write per-run request event logs.
        #[arg(long)]
        event_log: bool,
        /// Write the SMS batch-scheduler pick trace.
        #[arg(long)]
        sms_trace: bool,
    },
    /// Write the traces of one workload (a preset or a category draw).
    GenTrace {
        #[command(flatten)]
        config: ConfigArgs,
        /// Single preset by name.
        #[arg(long, conflicts_with = "category")]
        preset: Option<String>,
        /// Workload category (L, ML, M, HL, HML, HM, H).
        #[arg(long)]
        category: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Protocol-check a command log against the configured timing.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
        log: PathBuf,
    },
    /// Aggregate results.csv files into per-group mean/min/max.
    Report {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// Distinguishes protocol violations (exit 1) from other failures (exit 2).
struct Violations(usize);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Violations(n))) => {
            eprintln!("{n} protocol violation(s)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<Option<Violations>> {
    match cmd {
        Command::Run {
            config,
            out,
            dump_commands,
            event_log,
            sms_trace,
        } => {
            let mut cfg = config.load()?;
            if let Some(o) = out {
                cfg.experiment.output_dir = o;
            }
            let opts = HarnessOptions {
                command_log: dump_commands,
                event_log,
                sms_pick_trace: sms_trace,
            };
            let result = run_experiment(&cfg, opts)?;
            println!("{} rows -> {}", result.rows.len(), cfg.experiment.output_dir.display());
            let mut bad = 0;
            for (id, run) in &result.runs {
                let v = validate_log(&run.command_log, &cfg.dram);
                for x in v.iter().take(5) {
                    eprintln!("{id}: {x}");
                }
                bad += v.len();
            }
            Ok((bad > 0).then_some(Violations(bad)))
        }
        Command::GenTrace {
            config,
            preset,
            category,
            seed,
            out,
        } => {
            let mut cfg = config.load()?;
            let label = match (preset, category) {
                (Some(name), _) => {
                    let lib = library(&cfg)?;
                    let spec = lib.get(&name).with_context(|| format!("unknown preset '{name}'"))?;
                    cfg.experiment.sources = vec![spec.clone()];
                    "custom".to_string()
                }
                (None, Some(c)) => c,
                (None, None) if !cfg.experiment.sources.is_empty() => "custom".to_string(),
                (None, None) => bail!("give --preset, --category or explicit sources in the config"),
            };
            let (specs, inputs) = workload_inputs(&cfg, &label, seed)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (spec, input) in specs.iter().zip(&inputs) {
                let path = out.join(format!("{:02}-{}.trace", spec.source_id, spec.name));
                save_trace(&input.trace, &path)?;
                println!("{} {} records", path.display(), input.trace.len());
            }
            Ok(None)
        }
        Command::Validate { config, log } => {
            let cfg = config.load()?;
            let records = read_command_log(&log)?;
            let v = validate_log(&records, &cfg.dram);
            for x in &v {
                println!("{x}");
            }
            println!("{} commands checked", records.len());
            Ok((!v.is_empty()).then_some(Violations(v.len())))
        }
        Command::Report { results, out } => {
            let mut rows = Vec::new();
            for p in &results {
                rows.extend(read_results(p)?);
            }
            let summary = summarize(&rows);
            write_summary(&out, &summary)?;
            println!("{} groups from {} rows -> {}", summary.len(), rows.len(), out.display());
            Ok(None)
        }
    }
}

fn read_command_log(path: &Path) -> anyhow::Result<Vec<CommandRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| l.parse().map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1)))
        .collect()
}
