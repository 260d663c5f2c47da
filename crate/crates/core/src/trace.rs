//! Demand vectors from workload traces and synthetic generators.
//!
//! Traces are read in the Standard Workload Format used by the public
//! parallel-workload archives: `;` comment lines, then one job per line
//! with whitespace-separated numeric fields. Only submit time (field 2),
//! run time (field 4) and allocated processors (field 5) are used.

use std::io::{BufRead, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::model::DemandVector;

const SECONDS_PER_HOUR: u64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceJob {
    pub submit_time: u64,
    pub run_time: u64,
    pub processors: u32,
}

impl TraceJob {
    pub fn end_time(&self) -> u64 {
        self.submit_time + self.run_time
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropReport {
    /// Lines that were not comments and did not parse as a job record.
    pub malformed: usize,
    /// Well-formed records with a missing (negative) or zero-processor field.
    pub dropped: usize,
    pub comments: usize,
}

impl DropReport {
    pub fn total_dropped(&self) -> usize {
        self.malformed + self.dropped
    }
}

enum LineOutcome {
    Job(TraceJob),
    Dropped,
    Malformed,
}

fn parse_field(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_line(line: &str) -> LineOutcome {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 5 {
        return LineOutcome::Malformed;
    }
    let mut vals = [0f64; 5];
    for (slot, tok) in vals.iter_mut().zip(&fields) {
        match parse_field(tok) {
            Some(v) => *slot = v,
            None => return LineOutcome::Malformed,
        }
    }
    if fields[5..].iter().any(|t| parse_field(t).is_none()) {
        return LineOutcome::Malformed;
    }
    let (submit, run, procs) = (vals[1], vals[3], vals[4]);
    if submit < 0.0 || run < 0.0 || procs < 1.0 {
        return LineOutcome::Dropped;
    }
    LineOutcome::Job(TraceJob {
        submit_time: submit.round() as u64,
        run_time: run.round() as u64,
        processors: procs.round() as u32,
    })
}

/// Parses an SWF stream. Malformed lines and jobs with sentinel values are
/// skipped and counted, never treated as errors.
pub fn parse_swf<R: BufRead>(reader: R) -> Result<(Vec<TraceJob>, DropReport)> {
    let mut jobs = Vec::new();
    let mut report = DropReport::default();
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with(';') {
            report.comments += 1;
            continue;
        }
        match parse_line(trimmed) {
            LineOutcome::Job(j) => jobs.push(j),
            LineOutcome::Dropped => report.dropped += 1,
            LineOutcome::Malformed => report.malformed += 1,
        }
    }
    Ok((jobs, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Highest concurrent processor count within the stage.
    #[default]
    Peak,
    /// Time-averaged processor count over the stage, rounded up.
    MeanCeiling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DemandDerivationConfig {
    pub stage_hours: u32,
    pub processors_per_vm: u32,
    pub aggregation: Aggregation,
    pub horizon_stages: Option<usize>,
}

impl Default for DemandDerivationConfig {
    fn default() -> Self {
        DemandDerivationConfig {
            stage_hours: 1,
            processors_per_vm: 2,
            aggregation: Aggregation::Peak,
            horizon_stages: None,
        }
    }
}

impl DemandDerivationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stage_hours == 0 {
            return Err(Error::invalid("stage_hours must be at least 1"));
        }
        if self.processors_per_vm == 0 {
            return Err(Error::invalid("processors_per_vm must be at least 1"));
        }
        if self.horizon_stages == Some(0) {
            return Err(Error::invalid("horizon must be at least one stage"));
        }
        Ok(())
    }
}

/// Converts jobs into per-stage VM demand.
///
/// Each job occupies its processors over `[submit, submit + run_time)`. The
/// stage clock starts at the earliest submit time floored to the hour.
/// Per-stage processor occupancy (peak or mean-ceiling) is ceiling-divided
/// by `processors_per_vm`. Without a horizon the vector runs to the last
/// job end; with no jobs and no horizon it is a single idle stage.
pub fn derive_demand(jobs: &[TraceJob], config: &DemandDerivationConfig) -> Result<DemandVector> {
    config.validate()?;
    let stage_len = u64::from(config.stage_hours) * SECONDS_PER_HOUR;
    let active: Vec<&TraceJob> = jobs.iter().filter(|j| j.run_time > 0).collect();
    let origin = jobs.iter().map(|j| j.submit_time).min().unwrap_or(0) / SECONDS_PER_HOUR * SECONDS_PER_HOUR;
    let natural = active.iter().map(|j| (j.end_time() - origin).div_ceil(stage_len) as usize).max().unwrap_or(0);
    let stages = config.horizon_stages.unwrap_or(natural.max(1));

    // (time, delta); ends sort before starts at equal times
    let mut events: Vec<(u64, i64)> = Vec::with_capacity(active.len() * 2);
    for j in &active {
        events.push((j.submit_time - origin, i64::from(j.processors)));
        events.push((j.end_time() - origin, -i64::from(j.processors)));
    }
    events.sort_unstable();

    let ppv = u64::from(config.processors_per_vm);
    let mut demand = Vec::with_capacity(stages);
    let mut cur: i64 = 0;
    let mut ev = 0;
    for s in 0..stages as u64 {
        let start = s * stage_len;
        let end = start + stage_len;
        while ev < events.len() && events[ev].0 <= start {
            cur += events[ev].1;
            ev += 1;
        }
        let mut peak = cur;
        let mut area: u128 = 0;
        let mut last = start;
        while ev < events.len() && events[ev].0 < end {
            let (t, delta) = events[ev];
            area += (t - last) as u128 * cur as u128;
            last = t;
            cur += delta;
            peak = peak.max(cur);
            ev += 1;
        }
        area += (end - last) as u128 * cur as u128;
        let procs = match config.aggregation {
            Aggregation::Peak => peak as u64,
            Aggregation::MeanCeiling => area.div_ceil(stage_len as u128) as u64,
        };
        let vms = procs.div_ceil(ppv);
        demand.push(u32::try_from(vms).map_err(|_| Error::invalid("stage demand exceeds u32"))?);
    }
    DemandVector::new(demand)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthKind {
    /// Independent demands drawn uniformly from `lo..=hi`.
    Uniform { lo: u32, hi: u32 },
    /// A uniform baseline in `base_lo..=base_hi` with spike episodes. Each
    /// idle stage starts a spike with probability `burst_prob`; spikes last
    /// a geometric number of stages with mean `mean_burst_len` and multiply
    /// the baseline by `amplitude`.
    Bursty { base_lo: u32, base_hi: u32, burst_prob: f64, mean_burst_len: f64, amplitude: u32 },
}

impl SynthKind {
    pub fn uniform(lo: u32, hi: u32) -> Self {
        SynthKind::Uniform { lo, hi }
    }

    pub fn bursty_default() -> Self {
        SynthKind::Bursty { base_lo: 1, base_hi: 4, burst_prob: 0.08, mean_burst_len: 3.0, amplitude: 4 }
    }
}

pub fn synth_demand(kind: SynthKind, horizon: usize, seed: u64) -> Result<DemandVector> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least one stage"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demand = match kind {
        SynthKind::Uniform { lo, hi } => {
            if lo > hi {
                return Err(Error::invalid(format!("empty range {lo}..={hi}")));
            }
            (0..horizon).map(|_| rng.random_range(lo..=hi)).collect()
        }
        SynthKind::Bursty { base_lo, base_hi, burst_prob, mean_burst_len, amplitude } => {
            if base_lo > base_hi {
                return Err(Error::invalid(format!("empty baseline range {base_lo}..={base_hi}")));
            }
            if !(0.0..=1.0).contains(&burst_prob) {
                return Err(Error::invalid("burst probability must lie in [0, 1]"));
            }
            if !mean_burst_len.is_finite() || mean_burst_len < 1.0 {
                return Err(Error::invalid("mean burst length must be at least 1"));
            }
            if amplitude == 0 {
                return Err(Error::invalid("burst amplitude must be at least 1"));
            }
            // stages beyond the first are geometric with success 1/mean
            let extra = Geometric::new(1.0 / mean_burst_len).map_err(|e| Error::invalid(e.to_string()))?;
            let mut out = Vec::with_capacity(horizon);
            let mut burst_left = 0u64;
            for _ in 0..horizon {
                let base = rng.random_range(base_lo..=base_hi);
                if burst_left == 0 && rng.random_bool(burst_prob) {
                    burst_left = 1 + extra.sample(&mut rng);
                }
                if burst_left > 0 {
                    burst_left -= 1;
                    out.push(base.saturating_mul(amplitude));
                } else {
                    out.push(base);
                }
            }
            out
        }
    };
    DemandVector::new(demand)
}

/// Writes `stage,demand` rows (stages one-based) with a header line.
pub fn write_demand_csv<W: Write>(mut w: W, demand: &DemandVector) -> Result<()> {
    writeln!(w, "stage,demand")?;
    for (t, d) in demand.as_slice().iter().enumerate() {
        writeln!(w, "{},{}", t + 1, d)?;
    }
    Ok(())
}

pub fn read_demand_csv<R: BufRead>(reader: R) -> Result<DemandVector> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("stage")) {
            continue;
        }
        let (stage, value) =
            line.split_once(',').ok_or_else(|| Error::Format(format!("line {}: expected stage,demand", n + 1)))?;
        let stage: usize =
            stage.trim().parse().map_err(|_| Error::Format(format!("line {}: bad stage {stage:?}", n + 1)))?;
        if stage != out.len() + 1 {
            return Err(Error::Format(format!("line {}: expected stage {}, found {stage}", n + 1, out.len() + 1)));
        }
        let value: u32 =
            value.trim().parse().map_err(|_| Error::Format(format!("line {}: bad demand {value:?}", n + 1)))?;
        out.push(value);
    }
    DemandVector::new(out).map_err(|_| Error::Format("no demand rows".into()))
}

pub const CACHE_MAGIC: &[u8; 4] = b"RVPD";
pub const CACHE_VERSION: u8 = 1;

/// Binary cache: magic `RVPD`, version byte, little-endian `u32` length,
/// then that many little-endian `u32` demands.
pub fn write_demand_cache<W: Write>(mut w: W, demand: &DemandVector) -> Result<()> {
    let len = u32::try_from(demand.horizon()).map_err(|_| Error::invalid("demand vector too long for cache"))?;
    let mut buf = Vec::with_capacity(9 + demand.horizon() * 4);
    buf.extend_from_slice(CACHE_MAGIC);
    buf.push(CACHE_VERSION);
    buf.extend_from_slice(&len.to_le_bytes());
    for &d in demand.as_slice() {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_demand_cache<R: Read>(mut r: R) -> Result<DemandVector> {
    let mut header = [0u8; 9];
    r.read_exact(&mut header).map_err(|_| Error::Format("truncated cache header".into()))?;
    if &header[..4] != CACHE_MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    if header[4] != CACHE_VERSION {
        return Err(Error::Format(format!("unsupported cache version {}", header[4])));
    }
    let len = u32::from_le_bytes(header[5..9].try_into().expect("4 bytes")) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != len * 4 {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", len * 4, body.len())));
    }
    let demand = body.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    DemandVector::new(demand).map_err(|_| Error::Format("empty demand vector".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn job(submit: u64, run: u64, procs: u32) -> TraceJob {
        TraceJob { submit_time: submit, run_time: run, processors: procs }
    }

    #[test]
    fn parses_single_job() {
        let text = "; Version: 2.2\n1 0 0 3600 8 -1 -1 8 3600 -1 1 1 1 1 1 -1 -1 -1\n";
        let (jobs, rep) = parse_swf(text.as_bytes()).unwrap();
        assert_eq!(jobs, vec![job(0, 3600, 8)]);
        assert_eq!(rep, DropReport { malformed: 0, dropped: 0, comments: 1 });
    }

    #[test]
    fn sentinel_processors_are_dropped() {
        let text = "1 0 0 3600 -1 -1 -1 8 3600 -1 1 1 1 1 1 -1 -1 -1\n";
        let (jobs, rep) = parse_swf(text.as_bytes()).unwrap();
        assert!(jobs.is_empty());
        assert_eq!(rep.dropped, 1);
        assert_eq!(rep.total_dropped(), 1);
    }

    #[test]
    fn empty_input() {
        let (jobs, rep) = parse_swf("".as_bytes()).unwrap();
        assert!(jobs.is_empty());
        assert_eq!(rep.total_dropped(), 0);
    }

    #[test]
    fn garbage_lines_are_counted() {
        let text = "1 0 0 3600\nfoo bar baz qux quux\n2 0 0 10 1 x\n3 5 0 10 2\n";
        let (jobs, rep) = parse_swf(text.as_bytes()).unwrap();
        assert_eq!(jobs, vec![job(5, 10, 2)]);
        assert_eq!(rep.malformed, 3);
    }

    #[test]
    fn single_job_two_hours() {
        let cfg = DemandDerivationConfig { processors_per_vm: 4, ..Default::default() };
        let d = derive_demand(&[job(0, 7200, 8)], &cfg).unwrap();
        assert_eq!(d.as_slice(), &[2, 2]);
    }

    #[test]
    fn no_jobs_gives_idle_horizon() {
        let cfg = DemandDerivationConfig { horizon_stages: Some(5), ..Default::default() };
        assert_eq!(derive_demand(&[], &cfg).unwrap().as_slice(), &[0; 5]);
        assert_eq!(derive_demand(&[], &DemandDerivationConfig::default()).unwrap().as_slice(), &[0]);
    }

    #[test]
    fn overlapping_jobs_peak() {
        let cfg = DemandDerivationConfig { processors_per_vm: 4, ..Default::default() };
        // overlap during [1800, 3600)
        let d = derive_demand(&[job(0, 3600, 4), job(1800, 3600, 4)], &cfg).unwrap();
        assert_eq!(d.as_slice(), &[2, 1]);
    }

    #[test]
    fn back_to_back_jobs_do_not_overlap() {
        let cfg = DemandDerivationConfig { processors_per_vm: 1, ..Default::default() };
        let d = derive_demand(&[job(0, 1800, 3), job(1800, 1800, 3)], &cfg).unwrap();
        assert_eq!(d.as_slice(), &[3]);
    }

    #[test]
    fn mean_ceiling_aggregation() {
        let cfg = DemandDerivationConfig {
            processors_per_vm: 1,
            aggregation: Aggregation::MeanCeiling,
            ..Default::default()
        };
        // 4 procs for half an hour -> mean 2; 3 procs for 20 minutes -> mean 1
        let d = derive_demand(&[job(0, 1800, 4), job(3600, 1200, 3)], &cfg).unwrap();
        assert_eq!(d.as_slice(), &[2, 1]);
    }

    #[test]
    fn clock_starts_at_floored_first_submit() {
        let cfg = DemandDerivationConfig { processors_per_vm: 1, ..Default::default() };
        let d = derive_demand(&[job(7300, 100, 2), job(11000, 100, 1)], &cfg).unwrap();
        assert_eq!(d.as_slice(), &[2, 1]);
    }

    #[test]
    fn horizon_truncates_and_pads() {
        let cfg = DemandDerivationConfig { processors_per_vm: 1, horizon_stages: Some(1), ..Default::default() };
        assert_eq!(derive_demand(&[job(0, 7200, 1)], &cfg).unwrap().as_slice(), &[1]);
        let cfg = DemandDerivationConfig { horizon_stages: Some(4), ..cfg };
        assert_eq!(derive_demand(&[job(0, 7200, 1)], &cfg).unwrap().as_slice(), &[1, 1, 0, 0]);
    }

    #[test]
    fn invalid_config() {
        let cfg = DemandDerivationConfig { processors_per_vm: 0, ..Default::default() };
        assert!(derive_demand(&[], &cfg).is_err());
    }

    #[test]
    fn synth_uniform_degenerate() {
        let d = synth_demand(SynthKind::uniform(3, 3), 4, 11).unwrap();
        assert_eq!(d.as_slice(), &[3, 3, 3, 3]);
        assert!(synth_demand(SynthKind::uniform(4, 3), 4, 11).is_err());
        assert!(synth_demand(SynthKind::uniform(0, 3), 0, 11).is_err());
    }

    #[test]
    fn synth_is_deterministic() {
        for kind in [SynthKind::uniform(0, 9), SynthKind::bursty_default()] {
            assert_eq!(synth_demand(kind, 50, 7).unwrap(), synth_demand(kind, 50, 7).unwrap());
        }
    }

    #[test]
    fn synth_bursty_rejects_bad_params() {
        let bad = SynthKind::Bursty { base_lo: 1, base_hi: 2, burst_prob: 1.5, mean_burst_len: 2.0, amplitude: 3 };
        assert!(synth_demand(bad, 10, 1).is_err());
        let bad = SynthKind::Bursty { base_lo: 1, base_hi: 2, burst_prob: 0.5, mean_burst_len: 0.5, amplitude: 3 };
        assert!(synth_demand(bad, 10, 1).is_err());
    }

    #[test]
    fn bursty_is_spikier_than_uniform() {
        let mut bursty_ratio = 0.0;
        let mut uniform_ratio = 0.0;
        let seeds = 0..40u64;
        let n = seeds.clone().count() as f64;
        for seed in seeds {
            let b = synth_demand(SynthKind::bursty_default(), 100, seed).unwrap();
            let mean = b.total() as f64 / 100.0;
            bursty_ratio += f64::from(b.max()) / mean;
            // uniform on 0..=2m has mean m
            let hi = (2.0 * mean).round() as u32;
            let u = synth_demand(SynthKind::uniform(0, hi), 100, seed).unwrap();
            uniform_ratio += f64::from(u.max()) / (u.total() as f64 / 100.0);
        }
        assert!(bursty_ratio / n > uniform_ratio / n, "{} vs {}", bursty_ratio / n, uniform_ratio / n);
    }

    #[test]
    fn csv_and_cache_formats() {
        let d = DemandVector::new(vec![5, 0, 7]).unwrap();
        let mut csv = Vec::new();
        write_demand_csv(&mut csv, &d).unwrap();
        assert_eq!(String::from_utf8(csv.clone()).unwrap(), "stage,demand\n1,5\n2,0\n3,7\n");
        assert_eq!(read_demand_csv(csv.as_slice()).unwrap(), d);

        let mut bin = Vec::new();
        write_demand_cache(&mut bin, &d).unwrap();
        assert_eq!(&bin[..9], &[b'R', b'V', b'P', b'D', 1, 3, 0, 0, 0]);
        assert_eq!(&bin[9..13], &[5, 0, 0, 0]);
        assert_eq!(read_demand_cache(bin.as_slice()).unwrap(), d);
    }

    #[test]
    fn cache_rejects_corruption() {
        assert!(read_demand_cache(&b"RVPX\x01\x01\x00\x00\x00\x00\x00\x00\x00"[..]).is_err());
        assert!(read_demand_cache(&b"RVPD\x02\x01\x00\x00\x00\x00\x00\x00\x00"[..]).is_err());
        assert!(read_demand_cache(&b"RVPD\x01\x02\x00\x00\x00\x00\x00\x00\x00"[..]).is_err());
        assert!(read_demand_csv("stage,demand\n2,5\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn cache_round_trips(v in proptest::collection::vec(any::<u32>(), 1..64)) {
            let d = DemandVector::new(v).unwrap();
            let mut bin = Vec::new();
            write_demand_cache(&mut bin, &d).unwrap();
            prop_assert_eq!(read_demand_cache(bin.as_slice()).unwrap(), d);
        }

        #[test]
        fn derivation_ignores_job_order(
            raw in proptest::collection::vec((0u64..20_000, 0u64..9_000, 1u32..16), 0..12),
            ppv in 1u32..5,
            mean in any::<bool>(),
        ) {
            let jobs: Vec<_> = raw.iter().map(|&(s, r, p)| job(s, r, p)).collect();
            let mut rev = jobs.clone();
            rev.reverse();
            let cfg = DemandDerivationConfig {
                processors_per_vm: ppv,
                aggregation: if mean { Aggregation::MeanCeiling } else { Aggregation::Peak },
                ..Default::default()
            };
            prop_assert_eq!(derive_demand(&jobs, &cfg).unwrap(), derive_demand(&rev, &cfg).unwrap());
        }

        #[test]
        fn peak_never_undercounts_processor_hours(
            raw in proptest::collection::vec((0u64..20_000, 0u64..9_000, 1u32..16), 1..12),
            ppv in 1u32..5,
            h in 1u32..3,
        ) {
            let jobs: Vec<_> = raw.iter().map(|&(s, r, p)| job(s, r, p)).collect();
            let cfg = DemandDerivationConfig { processors_per_vm: ppv, stage_hours: h, ..Default::default() };
            let d = derive_demand(&jobs, &cfg).unwrap();
            let vm_seconds = d.total() as f64 * f64::from(h) * 3600.0;
            let proc_seconds: f64 = jobs.iter().map(|j| j.run_time as f64 * f64::from(j.processors)).sum();
            prop_assert!(vm_seconds + 1e-6 >= proc_seconds / f64::from(ppv));
        }
    }
}
