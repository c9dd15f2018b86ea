//! The cycle loop tying cores, schedulers and DRAM channels together.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dram::command::RequestId;
use crate::dram::{decode_address, Channel, CommandRecord, Cycle, DramError, DramTimingParams, Geometry, Location};
use crate::metrics::{CoreModel, SourceRun};
use crate::sched::{
    Atlas, AtlasConfig, BufferedScheduler, FrFcfs, MemoryRequest, MemoryScheduler, ParBs, RequestBuffer,
    SchedulerKind, SourceId, SourceKind, Tcm, TcmConfig,
};
use crate::sms::{PickRecord, SmsAudit, SmsConfig, SmsScheduler};
use crate::workload::{IntensityClass, ServiceRecord, TraceRecord};

/// Memory-system and scheduler configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub timing: DramTimingParams,
    pub channels: u32,
    /// Request-buffer entries per controller.
    pub buffer_capacity: usize,
    /// Entries of each buffer only CPU requests may use.
    pub cpu_reserved: usize,
    pub cycle_budget: Cycle,
    pub issue_width: u32,
    pub scheduler: SchedulerKind,
    pub sms: SmsConfig,
    pub atlas: AtlasConfig,
    pub tcm: TcmConfig,
    /// Seeds the SMS batch-scheduler draws.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            timing: DramTimingParams::default(),
            channels: 4,
            buffer_capacity: 300,
            cpu_reserved: 150,
            cycle_budget: 1_000_000,
            issue_width: 3,
            scheduler: SchedulerKind::Frfcfs,
            sms: SmsConfig::default(),
            atlas: AtlasConfig::default(),
            tcm: TcmConfig::default(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn geometry(&self) -> Geometry {
        self.timing.geometry(self.channels)
    }

    pub fn validate(&self, sources: usize) -> Result<(), String> {
        self.timing.validate().map_err(|e| e.to_string())?;
        self.sms.validate()?;
        if self.channels == 0 {
            return Err("channels must be at least 1".into());
        }
        if self.cycle_budget == 0 {
            return Err("cycle budget must be at least 1".into());
        }
        if self.issue_width == 0 {
            return Err("issue width must be at least 1".into());
        }
        if self.cpu_reserved > self.buffer_capacity {
            return Err(format!(
                "cpu_reserved ({}) exceeds buffer_capacity ({})",
                self.cpu_reserved, self.buffer_capacity
            ));
        }
        if self.buffer_capacity < sources {
            return Err(format!(
                "buffer_capacity ({}) is smaller than the number of sources ({sources})",
                self.buffer_capacity
            ));
        }
        if self.cpu_reserved == self.buffer_capacity {
            return Err("cpu_reserved leaves no buffer entries for GPU requests".into());
        }
        if !(self.atlas.alpha > 0.0 && self.atlas.alpha <= 1.0) || self.atlas.quantum == 0 {
            return Err("atlas.alpha must lie in (0, 1] and atlas.quantum be positive".into());
        }
        if self.tcm.quantum == 0 || self.tcm.shuffle_interval == 0 || !(0.0..=1.0).contains(&self.tcm.cluster_threshold) {
            return Err("tcm quantum and shuffle interval must be positive, cluster_threshold in [0, 1]".into());
        }
        Ok(())
    }
}

/// Optional recordings; all off by default.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    pub command_log: bool,
    pub event_log: bool,
    pub service_log: bool,
    pub sms_audit: bool,
    pub sms_pick_trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// The controller accepted a request.
    Arrive,
    Complete,
    /// `value` instructions or progress units retired.
    Retire,
    /// End of the source's active span: `value` is 1 when its trace drained
    /// and 0 when the cycle budget ran out first.
    Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub cycle: Cycle,
    pub kind: EventKind,
    pub source: SourceId,
    pub request: Option<RequestId>,
    pub value: u64,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            EventKind::Arrive => "arrive",
            EventKind::Complete => "complete",
            EventKind::Retire => "retire",
            EventKind::Finish => "finish",
        };
        write!(f, "{} {kind} {} ", self.cycle, self.source)?;
        match self.request {
            Some(r) => write!(f, "{r}")?,
            None => f.write_str("-")?,
        }
        write!(f, " {}", self.value)
    }
}

/// One source fed to [`simulate`]; its id is its index.
#[derive(Debug, Clone)]
pub struct SourceInput {
    pub kind: SourceKind,
    pub window: usize,
    /// Intensity class of a CPU source; selects its SMS age threshold.
    pub class: Option<IntensityClass>,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub scheduler: SchedulerKind,
    pub cycles: Cycle,
    pub sources: Vec<SourceRun>,
    pub command_log: Vec<CommandRecord>,
    pub events: Vec<Event>,
    pub service_log: Vec<ServiceRecord>,
    /// Summed over controllers, when auditing was enabled.
    pub sms_audit: Option<SmsAudit>,
    /// Stage-2 picks per controller, when tracing was enabled.
    pub sms_picks: Vec<Vec<PickRecord>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dram(#[from] DramError),
}

pub fn build_scheduler(cfg: &SimConfig, channel: u32, sources: usize) -> Box<dyn MemoryScheduler> {
    let buffer = || RequestBuffer::new(cfg.buffer_capacity, cfg.cpu_reserved);
    let t = cfg.timing;
    match cfg.scheduler {
        SchedulerKind::Frfcfs => Box::new(BufferedScheduler::new(FrFcfs, buffer(), t)),
        SchedulerKind::Parbs => Box::new(BufferedScheduler::new(ParBs::new(), buffer(), t)),
        SchedulerKind::Atlas => Box::new(BufferedScheduler::new(Atlas::new(cfg.atlas), buffer(), t)),
        SchedulerKind::Tcm => Box::new(BufferedScheduler::new(Tcm::new(cfg.tcm), buffer(), t)),
        SchedulerKind::Sms => Box::new(SmsScheduler::new(cfg.sms, sources, t.banks_per_channel, sms_seed(cfg.seed, channel))),
    }
}

fn sms_seed(seed: u64, channel: u32) -> u64 {
    seed ^ (channel as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

#[derive(Debug, Clone, Copy)]
struct RequestMeta {
    source: SourceId,
    arrival: Cycle,
    bank: usize,
    row_hit: bool,
}

#[derive(Debug, Clone, Default)]
struct SourceAccum {
    per_bank: Vec<u32>,
    active_banks: u64,
    in_flight: u64,
    busy: u64,
    bank_cycles: u64,
    columns: u64,
    hits: u64,
}

enum Controller {
    Generic(Box<dyn MemoryScheduler>),
    Sms(Box<SmsScheduler>),
}

impl Controller {
    fn get(&mut self) -> &mut dyn MemoryScheduler {
        match self {
            Controller::Generic(s) => s.as_mut(),
            Controller::Sms(s) => s.as_mut(),
        }
    }
}

/// Memory-system half of the simulator: controllers, channels, in-flight
/// bookkeeping and optional logs. Requests enter through [`Engine::admit`].
pub struct Engine {
    cfg: SimConfig,
    geometry: Geometry,
    channels: Vec<Channel>,
    controllers: Vec<Controller>,
    completions: BinaryHeap<Reverse<(Cycle, u32, RequestId)>>,
    meta: Vec<RequestMeta>,
    accum: Vec<SourceAccum>,
    opts: SimOptions,
    command_log: Vec<CommandRecord>,
    events: Vec<Event>,
    service_log: Vec<ServiceRecord>,
}

impl Engine {
    pub fn new(cfg: &SimConfig, sources: usize, opts: SimOptions) -> Result<Self, SimError> {
        Self::with_classes(cfg, &vec![None; sources], opts)
    }

    /// Like [`Engine::new`]; `classes[i]` selects source `i`'s SMS age threshold.
    pub fn with_classes(cfg: &SimConfig, classes: &[Option<IntensityClass>], opts: SimOptions) -> Result<Self, SimError> {
        let sources = classes.len();
        cfg.validate(sources).map_err(SimError::Config)?;
        let geometry = cfg.geometry();
        let controllers = (0..cfg.channels)
            .map(|ch| {
                if cfg.scheduler == SchedulerKind::Sms {
                    let thresholds: Vec<Cycle> = classes.iter().map(|&c| cfg.sms.threshold_for(c)).collect();
                    let mut s =
                        SmsScheduler::with_thresholds(cfg.sms, &thresholds, cfg.timing.banks_per_channel, sms_seed(cfg.seed, ch));
                    if opts.sms_audit {
                        s.enable_audit();
                    }
                    if opts.sms_pick_trace {
                        s.enable_pick_trace();
                    }
                    Controller::Sms(Box::new(s))
                } else {
                    Controller::Generic(build_scheduler(cfg, ch, sources))
                }
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            geometry,
            channels: (0..cfg.channels).map(|c| Channel::new(c, cfg.timing)).collect(),
            controllers,
            completions: BinaryHeap::new(),
            meta: Vec::new(),
            accum: vec![
                SourceAccum {
                    per_bank: vec![0; geometry.total_banks()],
                    ..SourceAccum::default()
                };
                sources
            ],
            opts,
            command_log: Vec::new(),
            events: Vec::new(),
            service_log: Vec::new(),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Commands issued so far, when command logging is enabled.
    pub fn command_log(&self) -> &[CommandRecord] {
        &self.command_log
    }

    pub fn in_flight(&self) -> u64 {
        self.accum.iter().map(|a| a.in_flight).sum()
    }

    /// Retires every request whose data burst ends at `cycle`, calling
    /// `done(source, request)` for each.
    pub fn complete_due(&mut self, cycle: Cycle, mut done: impl FnMut(SourceId, RequestId)) {
        while let Some(&Reverse((at, ch, id))) = self.completions.peek() {
            if at > cycle {
                break;
            }
            debug_assert_eq!(at, cycle, "completion missed");
            self.completions.pop();
            let req = self.controllers[ch as usize]
                .get()
                .complete(id, cycle)
                .expect("completed request was in flight");
            let m = self.meta[id as usize];
            let a = &mut self.accum[m.source as usize];
            a.in_flight -= 1;
            a.per_bank[m.bank] -= 1;
            if a.per_bank[m.bank] == 0 {
                a.active_banks -= 1;
            }
            if self.opts.service_log {
                self.service_log.push(ServiceRecord {
                    request: id,
                    source: m.source,
                    arrival: m.arrival,
                    completion: cycle,
                    bank: m.bank,
                    row_hit: m.row_hit,
                });
            }
            if self.opts.event_log {
                self.events.push(Event {
                    cycle,
                    kind: EventKind::Complete,
                    source: m.source,
                    request: Some(id),
                    value: 0,
                });
            }
            debug_assert_eq!(req.source, m.source);
            done(m.source, id);
        }
    }

    /// Offers a request to its channel's controller.
    pub fn admit(&mut self, cycle: Cycle, source: SourceId, kind: SourceKind, loc: Location, is_write: bool) -> bool {
        let id = self.meta.len() as RequestId;
        let req = MemoryRequest::new(id, source, kind, cycle, loc, is_write);
        if !self.controllers[loc.channel as usize].get().admit(req, cycle).is_accepted() {
            return false;
        }
        let bank = loc.global_bank(self.geometry.banks);
        self.meta.push(RequestMeta {
            source,
            arrival: cycle,
            bank,
            row_hit: false,
        });
        let a = &mut self.accum[source as usize];
        a.in_flight += 1;
        a.per_bank[bank] += 1;
        if a.per_bank[bank] == 1 {
            a.active_banks += 1;
        }
        if self.opts.event_log {
            self.events.push(Event {
                cycle,
                kind: EventKind::Arrive,
                source,
                request: Some(id),
                value: 0,
            });
        }
        true
    }

    /// Runs every controller for one cycle and closes the cycle's accounting.
    pub fn schedule(&mut self, cycle: Cycle) -> Result<(), SimError> {
        for (ch, ctrl) in self.controllers.iter_mut().enumerate() {
            let sched = ctrl.get();
            sched.tick(cycle);
            let channel = &mut self.channels[ch];
            let Some(cmd) = sched.pick_command(cycle, channel) else { continue };
            let outcome = channel.issue(&cmd, cycle)?;
            if cmd.kind.is_column() {
                let id = cmd.request.expect("column command carries its request");
                let done = outcome.completion.expect("column command completes");
                self.completions.push(Reverse((done, ch as u32, id)));
                let m = &mut self.meta[id as usize];
                m.row_hit = outcome.row_hit;
                let a = &mut self.accum[m.source as usize];
                a.columns += 1;
                a.hits += u64::from(outcome.row_hit);
            }
            if self.opts.command_log {
                self.command_log.push(CommandRecord { cycle, command: cmd });
            }
            sched.on_issue(&cmd, &outcome, cycle);
        }
        for a in &mut self.accum {
            if a.in_flight > 0 {
                a.busy += 1;
                a.bank_cycles += a.active_banks;
            }
        }
        Ok(())
    }

    fn record_retire(&mut self, cycle: Cycle, source: SourceId, n: u64) {
        if self.opts.event_log && n > 0 {
            self.events.push(Event {
                cycle,
                kind: EventKind::Retire,
                source,
                request: None,
                value: n,
            });
        }
    }

    fn record_finish(&mut self, cycle: Cycle, source: SourceId, drained: bool) {
        if self.opts.event_log {
            self.events.push(Event {
                cycle,
                kind: EventKind::Finish,
                source,
                request: None,
                value: u64::from(drained),
            });
        }
    }

    fn finish(self, cycles: Cycle, sources: Vec<SourceRun>) -> RunResult {
        let mut sms_audit = None;
        let mut sms_picks = Vec::new();
        for ctrl in &self.controllers {
            if let Controller::Sms(s) = ctrl {
                if let Some(a) = s.audit() {
                    let total: &mut SmsAudit = sms_audit.get_or_insert_with(SmsAudit::default);
                    total.batches_checked += a.batches_checked;
                    total.homogeneity_violations += a.homogeneity_violations;
                    total.contiguity_violations += a.contiguity_violations;
                    total.accounting_violations += a.accounting_violations;
                }
                if self.opts.sms_pick_trace {
                    sms_picks.push(s.pick_trace().to_vec());
                }
            }
        }
        RunResult {
            scheduler: self.cfg.scheduler,
            cycles,
            sources,
            command_log: self.command_log,
            events: self.events,
            service_log: self.service_log,
            sms_audit,
            sms_picks,
        }
    }

    fn source_stats(&self, source: usize) -> (u64, f64, f64) {
        let a = &self.accum[source];
        let rbl = if a.columns == 0 { 0.0 } else { a.hits as f64 / a.columns as f64 };
        let blp = if a.busy == 0 { 0.0 } else { a.bank_cycles as f64 / a.busy as f64 };
        (a.columns, rbl, blp)
    }
}

/// Runs the sources' traces through the memory system until every core is
/// idle or the cycle budget is spent.
pub fn simulate(cfg: &SimConfig, sources: &[SourceInput], opts: SimOptions) -> Result<RunResult, SimError> {
    let classes: Vec<_> = sources.iter().map(|s| s.class).collect();
    let mut engine = Engine::with_classes(cfg, &classes, opts)?;
    let geometry = *engine.geometry();
    let mut cores: Vec<CoreModel> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| CoreModel::new(i as SourceId, s.kind, s.window, cfg.issue_width, s.trace.clone()))
        .collect();
    for s in sources {
        for r in &s.trace {
            decode_address(r.address, &geometry)?;
        }
    }
    let mut progress = Vec::new();
    let mut cycle = 0;
    while cycle < cfg.cycle_budget {
        engine.complete_due(cycle, |src, _| {
            let units = cores[src as usize].on_complete(cycle);
            if units > 0 {
                progress.push((src, units));
            }
        });
        for (src, units) in progress.drain(..) {
            engine.record_retire(cycle, src, units);
        }
        let mut all_idle = true;
        for core in cores.iter_mut() {
            let (src, kind) = (core.source, core.kind);
            let out = core.step(cycle, |rec| {
                let loc = decode_address(rec.address, &geometry).expect("checked above");
                engine.admit(cycle, src, kind, loc, rec.is_write)
            });
            engine.record_retire(cycle, src, out.retired);
            if core.finished_at() == Some(cycle) {
                engine.record_finish(cycle, src, true);
            }
            all_idle &= core.is_idle();
        }
        if all_idle && engine.in_flight() == 0 {
            break;
        }
        engine.schedule(cycle)?;
        cycle += 1;
    }
    for c in &cores {
        if c.finished_at().is_none_or(|t| t > cycle) {
            engine.record_finish(cycle, c.source, false);
        }
    }
    let runs = cores
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (requests, rbl, blp) = engine.source_stats(i);
            SourceRun {
                source: c.source,
                kind: c.kind,
                retired: c.retired(),
                active_cycles: c.finished_at().unwrap_or(cycle).min(cycle),
                requests,
                rbl,
                blp,
            }
        })
        .collect();
    Ok(engine.finish(cycle, runs))
}
