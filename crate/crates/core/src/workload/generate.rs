use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::{SourceSpec, TraceRecord, WorkloadError};
use crate::dram::{encode_address, DramTimingParams, Geometry, Location};
use crate::sched::SourceKind;

/// Turns a [`SourceSpec`] into a request trace for a given memory system.
///
/// Requests rotate over `ceil(blp_target)` bank slots spread across
/// channels first. Each slot stays in its current row with probability
/// `rbl_target` and otherwise jumps to another row of its region; GPU slots
/// make that choice jointly once per rotation. Requests
/// come in bursts of [`SourceSpec::burst_len`] with no gap inside a burst;
/// the gap before each burst is geometric with a mean chosen so the source
/// hits its target intensity when running alone.
#[derive(Debug, Clone, Copy)]
pub struct TraceGenerator {
    pub timing: DramTimingParams,
    pub channels: u32,
    /// CPU instructions retired per cycle.
    pub issue_width: u32,
}

impl Default for TraceGenerator {
    fn default() -> Self {
        Self {
            timing: DramTimingParams::default(),
            channels: 4,
            issue_width: 3,
        }
    }
}

impl TraceGenerator {
    pub fn new(timing: DramTimingParams, channels: u32, issue_width: u32) -> Self {
        Self {
            timing,
            channels,
            issue_width,
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.timing.geometry(self.channels)
    }

    /// Mean compute gap before a burst: instructions for CPUs, idle cycles
    /// for GPUs.
    pub fn mean_gap(&self, spec: &SourceSpec) -> Result<f64, WorkloadError> {
        Ok(self.gap_distribution(spec)?.map_or(0.0, |p| (1.0 - p) / p))
    }

    /// Success probability of the geometric gap, `None` for always-zero gaps.
    fn gap_distribution(&self, spec: &SourceSpec) -> Result<Option<f64>, WorkloadError> {
        let burst = spec.burst_len() as f64;
        let period = 1000.0 * burst / spec.intensity;
        let busy = match spec.kind {
            SourceKind::Gpu => burst,
            SourceKind::Cpu => self.expected_burst_cycles(spec),
        };
        let spare = period - busy;
        if spare < 0.0 {
            return Err(WorkloadError::Unsatisfiable {
                name: spec.name.clone(),
                target: "intensity",
                reason: format!(
                    "{} requests per kilocycle needs bursts every {period:.1} cycles but one burst takes {busy:.1}",
                    spec.intensity
                ),
            });
        }
        if spare == 0.0 {
            return Ok(None);
        }
        let x = match spec.kind {
            SourceKind::Gpu => spare / (spare + 1.0),
            SourceKind::Cpu => solve_ceil_mean(spare, self.issue_width),
        };
        Ok(Some(1.0 - x))
    }

    /// Expected cycles from a CPU burst's first issue until the core can
    /// retire again, assuming an otherwise idle memory system.
    fn expected_burst_cycles(&self, spec: &SourceSpec) -> f64 {
        let b = spec.burst_len();
        if (spec.max_outstanding as u32) > b || b > 12 {
            return b as f64;
        }
        let t = &self.timing;
        let column = (1.0 - spec.write_fraction) * t.t_cl as f64
            + spec.write_fraction * t.t_cwl as f64
            + t.burst_cycles as f64;
        let hit = column;
        let miss = column + (t.t_rp + t.t_rcd) as f64;
        let q = spec.rbl_target;
        let mut expected = 0.0;
        for pattern in 0u32..(1 << b) {
            let mut prob = 1.0;
            let mut first_done = f64::INFINITY;
            for j in 0..b {
                let is_hit = pattern >> j & 1 == 1;
                prob *= if is_hit { q } else { 1.0 - q };
                first_done = first_done.min(j as f64 + if is_hit { hit } else { miss });
            }
            expected += prob * first_done.max(b as f64);
        }
        expected
    }

    pub fn generate(&self, spec: &SourceSpec, seed: u64, length: usize) -> Result<Vec<TraceRecord>, WorkloadError> {
        let g = self.geometry();
        if length == 0 {
            return Err(WorkloadError::InvalidSpec {
                name: spec.name.clone(),
                reason: "trace length must be at least 1".into(),
            });
        }
        spec.validate(g.banks)?;
        let slots = spec.bank_slots();
        if spec.footprint_rows < slots {
            return Err(WorkloadError::Unsatisfiable {
                name: spec.name.clone(),
                target: "blp_target",
                reason: format!(
                    "{} bank slots need at least {slots} distinct rows but footprint_rows is {}",
                    spec.blp_target, spec.footprint_rows
                ),
            });
        }
        let region = spec.footprint_rows / slots;
        if region > g.rows {
            return Err(WorkloadError::Unsatisfiable {
                name: spec.name.clone(),
                target: "footprint_rows",
                reason: format!("{region} rows per bank exceeds the {} rows of a bank", g.rows),
            });
        }
        if spec.rbl_target < 1.0 && region < 2 {
            return Err(WorkloadError::Unsatisfiable {
                name: spec.name.clone(),
                target: "rbl_target",
                reason: format!(
                    "row switches need at least 2 rows per bank slot, footprint_rows {} over {slots} slots gives {region}",
                    spec.footprint_rows
                ),
            });
        }
        let gap = match self.gap_distribution(spec)? {
            Some(p) => Some(Geometric::new(p).map_err(|e| WorkloadError::InvalidSpec {
                name: spec.name.clone(),
                reason: e.to_string(),
            })?),
            None => None,
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c0 = rng.random_range(0..g.channels);
        let b0 = rng.random_range(0..g.banks);
        let mut state: Vec<SlotState> = (0..slots)
            .map(|i| SlotState {
                channel: (c0 + i) % g.channels,
                bank: (b0 + i / g.channels) % g.banks,
                base_row: rng.random_range(0..=g.rows - region),
                row: None,
                column: 0,
            })
            .collect();
        let burst = spec.burst_len() as usize;
        // GPU slots switch rows together, like a frame buffer striped over banks
        let lockstep = spec.kind == SourceKind::Gpu;
        let mut round_stay = false;
        let mut out = Vec::with_capacity(length);
        for n in 0..length {
            let gap = match (&gap, n % burst) {
                (Some(d), 0) => d.sample(&mut rng),
                _ => 0,
            };
            let slot = n % slots as usize;
            let stay = if !lockstep {
                rng.random::<f64>() < spec.rbl_target
            } else {
                if slot == 0 {
                    round_stay = rng.random::<f64>() < spec.rbl_target;
                }
                round_stay
            };
            let s = &mut state[slot];
            match s.row {
                Some(_) if stay => {
                    s.column = (s.column + 1) % g.columns;
                }
                current => {
                    let mut offset = rng.random_range(0..region - u32::from(current.is_some()));
                    if let Some(r) = current {
                        if offset >= r - s.base_row {
                            offset += 1;
                        }
                    }
                    s.row = Some(s.base_row + offset);
                    s.column = rng.random_range(0..g.columns);
                }
            }
            let loc = Location {
                channel: s.channel,
                bank: s.bank,
                row: s.row.expect("row chosen"),
                column: s.column,
            };
            out.push(TraceRecord {
                source: spec.source_id,
                gap,
                address: encode_address(&loc, &g).expect("slot inside geometry"),
                is_write: rng.random::<f64>() < spec.write_fraction,
            });
        }
        Ok(out)
    }
}

struct SlotState {
    channel: u32,
    bank: u32,
    base_row: u32,
    row: Option<u32>,
    column: u32,
}

/// Finds `x` in [0, 1) with `x / (1 - x^w) = target`, the mean of
/// `ceil(g / w)` for a geometric `g` with failure probability `x`.
fn solve_ceil_mean(target: f64, w: u32) -> f64 {
    let f = |x: f64| x / (1.0 - x.powi(w as i32));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::decode_address;

    fn cpu() -> SourceSpec {
        SourceSpec {
            name: "t".into(),
            source_id: 3,
            kind: SourceKind::Cpu,
            intensity: 5.0,
            rbl_target: 0.3,
            blp_target: 1.0,
            write_fraction: 0.2,
            max_outstanding: 1,
            footprint_rows: 512,
            burst: None,
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let g = TraceGenerator::default();
        let a = g.generate(&cpu(), 9, 500).unwrap();
        assert_eq!(a, g.generate(&cpu(), 9, 500).unwrap());
        assert_ne!(a, g.generate(&cpu(), 10, 500).unwrap());
    }

    #[test]
    fn single_record() {
        let t = TraceGenerator::default().generate(&cpu(), 1, 1).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].source, 3);
    }

    #[test]
    fn ceil_mean_solver_matches_series() {
        for (target, w) in [(0.5, 3), (4.0, 3), (60.0, 1), (123.0, 3)] {
            let x: f64 = solve_ceil_mean(target, w);
            let series: f64 = (1..20_000).map(|k| x.powi(((k - 1) * w + 1) as i32)).sum();
            assert!((series - target).abs() < 1e-6 * target.max(1.0), "{target} {series}");
        }
    }

    #[test]
    fn gpu_stripes_same_row_runs_over_slots() {
        let spec = SourceSpec {
            kind: SourceKind::Gpu,
            intensity: 300.0,
            rbl_target: 0.9,
            blp_target: 4.0,
            write_fraction: 0.0,
            max_outstanding: 1024,
            footprint_rows: 4096,
            ..cpu()
        };
        let gen = TraceGenerator::default();
        let t = gen.generate(&spec, 4, 4000).unwrap();
        let locs: Vec<_> = t.iter().map(|r| decode_address(r.address, &gen.geometry()).unwrap()).collect();
        let banks: std::collections::BTreeSet<_> = locs.iter().map(|l| l.global_bank(8)).collect();
        assert_eq!(banks.len(), 4);
        let same_row = (4..locs.len()).filter(|&i| locs[i].row == locs[i - 4].row).count();
        let frac = same_row as f64 / (locs.len() - 4) as f64;
        assert!((frac - 0.9).abs() < 0.03, "{frac}");
        assert!(t.iter().enumerate().all(|(i, r)| i % 64 == 0 || r.gap == 0));
    }

    #[test]
    fn unsatisfiable_combination_names_target() {
        let spec = SourceSpec {
            rbl_target: 1.0,
            blp_target: 8.0,
            footprint_rows: 1,
            max_outstanding: 16,
            ..cpu()
        };
        let err = TraceGenerator::default().generate(&spec, 1, 10).unwrap_err();
        assert!(matches!(err, WorkloadError::Unsatisfiable { target: "blp_target", .. }), "{err}");
        let spec = SourceSpec { footprint_rows: 1, ..cpu() };
        let err = TraceGenerator::default().generate(&spec, 1, 10).unwrap_err();
        assert!(matches!(err, WorkloadError::Unsatisfiable { target: "rbl_target", .. }), "{err}");
        let spec = SourceSpec { intensity: 400.0, ..cpu() };
        let err = TraceGenerator::default().generate(&spec, 1, 10).unwrap_err();
        assert!(matches!(err, WorkloadError::Unsatisfiable { target: "intensity", .. }), "{err}");
    }

    #[test]
    fn rejects_out_of_range_spec() {
        let spec = SourceSpec { blp_target: 0.5, ..cpu() };
        assert!(matches!(
            TraceGenerator::default().generate(&spec, 1, 10),
            Err(WorkloadError::InvalidSpec { .. })
        ));
    }
}
