//! Cluster-trace ingestion and job-set generation.
//!
//! A trace is delimiter-separated text with five columns:
//! `timestamp, machine_id, cpu_utilisation, memory_utilisation,
//! disk_utilisation`. The header row is optional. Only the timestamp and the
//! CPU column feed job derivation; memory and disk are parsed and kept but
//! influence nothing.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{JobId, JobSpec};

/// The trace shipped with the crate: 200 rows produced by
/// [`generate_trace`] with [`TraceShape::default`] and [`BUNDLED_TRACE_SEED`].
pub const BUNDLED_TRACE: &str = include_str!("../data/synthetic_trace.csv");
pub const BUNDLED_TRACE_ROWS: usize = 200;
pub const BUNDLED_TRACE_SEED: u64 = 2024;

pub const TRACE_HEADER: [&str; 5] = [
    "timestamp",
    "machine_id",
    "cpu_utilisation",
    "memory_utilisation",
    "disk_utilisation",
];

/// Job-load multipliers swept by default.
pub const LOAD_GRID: [f64; 6] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub timestamp: f64,
    pub machine_id: String,
    pub cpu_utilisation: f64,
    pub memory_utilisation: f64,
    pub disk_utilisation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    ColumnCountMismatch { found: usize },
    Unparsable { column: &'static str, value: String },
    OutOfRange { column: &'static str, value: f64 },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::ColumnCountMismatch { found } => {
                write!(f, "expected 5 columns, found {found}")
            }
            RejectReason::Unparsable { column, value } => {
                write!(f, "{column}: cannot parse {value:?}")
            }
            RejectReason::OutOfRange { column, value } => write!(f, "{column}: {value} out of range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// 1-based line number in the source.
    pub line: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedTrace {
    pub records: Vec<TraceRecord>,
    pub rejected: Vec<Rejection>,
}

impl ParsedTrace {
    pub fn out_of_range(&self) -> usize {
        self.rejected
            .iter()
            .filter(|r| matches!(r.reason, RejectReason::OutOfRange { .. }))
            .count()
    }
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("trace file not found: {0}")]
    FileNotFound(String),
    #[error("trace has no valid rows ({rejected} rejected)")]
    NoValidRows { rejected: usize },
    #[error("no trace records to derive jobs from")]
    EmptyTrace,
    #[error("empty job set")]
    EmptyJobSet,
    #[error("invalid range for {name}: [{lo}, {hi}]")]
    InvalidRange { name: &'static str, lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Reads a trace file. Malformed rows are tallied in
/// [`ParsedTrace::rejected`]; the call fails only if nothing survives.
pub fn parse_trace(path: &Path, delimiter: u8) -> Result<ParsedTrace, WorkloadError> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => WorkloadError::FileNotFound(path.display().to_string()),
        _ => WorkloadError::Io(e),
    })?;
    parse_trace_from(file, delimiter)
}

pub fn parse_trace_str(text: &str, delimiter: u8) -> Result<ParsedTrace, WorkloadError> {
    parse_trace_from(text.as_bytes(), delimiter)
}

pub fn parse_trace_from<R: Read>(input: R, delimiter: u8) -> Result<ParsedTrace, WorkloadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(delimiter)
        .from_reader(input);
    let mut out = ParsedTrace::default();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if i == 0 && row.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue; // header
        }
        match parse_row(&row) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.rejected.push(Rejection { line, reason }),
        }
    }
    if out.records.is_empty() {
        return Err(WorkloadError::NoValidRows {
            rejected: out.rejected.len(),
        });
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord) -> Result<TraceRecord, RejectReason> {
    if row.len() != 5 {
        return Err(RejectReason::ColumnCountMismatch { found: row.len() });
    }
    let num = |idx: usize, column: &'static str| -> Result<f64, RejectReason> {
        row[idx].parse::<f64>().map_err(|_| RejectReason::Unparsable {
            column,
            value: row[idx].to_string(),
        })
    };
    let timestamp = num(0, "timestamp")?;
    if !(timestamp >= 0.0 && timestamp.is_finite()) {
        return Err(RejectReason::OutOfRange {
            column: "timestamp",
            value: timestamp,
        });
    }
    let mut pct = [0.0; 3];
    for (k, column) in ["cpu_utilisation", "memory_utilisation", "disk_utilisation"]
        .into_iter()
        .enumerate()
    {
        let v = num(k + 2, column)?;
        if !(0.0..=100.0).contains(&v) {
            return Err(RejectReason::OutOfRange { column, value: v });
        }
        pct[k] = v;
    }
    Ok(TraceRecord {
        timestamp,
        machine_id: row[1].to_string(),
        cpu_utilisation: pct[0],
        memory_utilisation: pct[1],
        disk_utilisation: pct[2],
    })
}

/// Writes records with a header row, in the format [`parse_trace`] reads.
pub fn write_trace<W: Write>(records: &[TraceRecord], out: W, delimiter: u8) -> Result<(), WorkloadError> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record([
            r.timestamp.to_string(),
            r.machine_id.clone(),
            r.cpu_utilisation.to_string(),
            r.memory_utilisation.to_string(),
            r.disk_utilisation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Constants turning utilisation percentages into job parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMapping {
    pub base_mips_per_percent: f64,
    pub data_per_percent: f64,
    /// Submit every job at time zero instead of at its timestamp.
    pub batch: bool,
}

impl Default for TraceMapping {
    fn default() -> Self {
        TraceMapping {
            base_mips_per_percent: 20.0,
            data_per_percent: 10.0,
            batch: true,
        }
    }
}

/// One job per record with positive CPU utilisation; rows at 0% would give
/// a job with no demand and are skipped. Job ids are record indices.
pub fn jobs_from_trace(records: &[TraceRecord], mapping: &TraceMapping) -> Result<Vec<JobSpec>, WorkloadError> {
    if records.is_empty() {
        return Err(WorkloadError::EmptyTrace);
    }
    for (name, v) in [
        ("base_mips_per_percent", mapping.base_mips_per_percent),
        ("data_per_percent", mapping.data_per_percent),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(WorkloadError::InvalidParameter(format!("{name} must be > 0, got {v}")));
        }
    }
    let jobs: Vec<JobSpec> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.cpu_utilisation > 0.0)
        .map(|(i, r)| {
            let demand = r.cpu_utilisation * mapping.base_mips_per_percent;
            JobSpec {
                id: JobId(i as u32),
                cpu_demand: demand,
                length: demand,
                data_volume: r.cpu_utilisation * mapping.data_per_percent,
                arrival_time: if mapping.batch { 0.0 } else { r.timestamp },
            }
        })
        .collect();
    if jobs.is_empty() {
        return Err(WorkloadError::EmptyTrace);
    }
    Ok(jobs)
}

/// Multiplies every job's demand and length, so the mean demand becomes
/// `mean × multiplier` while relative sizes are kept.
pub fn scale_load(jobs: &[JobSpec], multiplier: f64) -> Result<Vec<JobSpec>, WorkloadError> {
    if jobs.is_empty() {
        return Err(WorkloadError::EmptyJobSet);
    }
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(WorkloadError::InvalidParameter(format!(
            "load multiplier must be > 0, got {multiplier}"
        )));
    }
    Ok(jobs
        .iter()
        .map(|j| JobSpec {
            cpu_demand: j.cpu_demand * multiplier,
            length: j.length * multiplier,
            ..j.clone()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthRanges {
    pub cpu_demand: [f64; 2],
    pub length: [f64; 2],
    pub data_volume: [f64; 2],
}

impl Default for SynthRanges {
    fn default() -> Self {
        SynthRanges {
            cpu_demand: [100.0, 1500.0],
            length: [500.0, 4000.0],
            data_volume: [10.0, 500.0],
        }
    }
}

fn check_range(name: &'static str, [lo, hi]: [f64; 2], min: f64, strict: bool) -> Result<(), WorkloadError> {
    let lo_ok = if strict { lo > min } else { lo >= min };
    if !(lo_ok && lo <= hi && hi.is_finite()) {
        return Err(WorkloadError::InvalidRange { name, lo, hi });
    }
    Ok(())
}

fn draw(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// `n` jobs with uniform draws from `ranges`, all arriving at time zero.
pub fn synth_jobs(n: usize, ranges: &SynthRanges, seed: u64) -> Result<Vec<JobSpec>, WorkloadError> {
    if n == 0 {
        return Err(WorkloadError::InvalidParameter("job count must be > 0".into()));
    }
    check_range("cpu_demand", ranges.cpu_demand, 0.0, true)?;
    check_range("length", ranges.length, 0.0, true)?;
    check_range("data_volume", ranges.data_volume, 0.0, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| JobSpec {
            id: JobId(i as u32),
            cpu_demand: draw(&mut rng, ranges.cpu_demand),
            length: draw(&mut rng, ranges.length),
            data_volume: draw(&mut rng, ranges.data_volume),
            arrival_time: 0.0,
        })
        .collect())
}

/// Distribution of generated trace rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceShape {
    pub machines: u32,
    pub cpu_utilisation: [f64; 2],
    pub memory_utilisation: [f64; 2],
    pub disk_utilisation: [f64; 2],
    /// Seconds between consecutive rows.
    pub interval: f64,
}

impl Default for TraceShape {
    fn default() -> Self {
        TraceShape {
            machines: 20,
            cpu_utilisation: [2.0, 15.0],
            memory_utilisation: [20.0, 90.0],
            disk_utilisation: [5.0, 60.0],
            interval: 1.0,
        }
    }
}

fn percent(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    (draw(rng, range) * 100.0).round() / 100.0
}

/// Seeded synthetic trace rows, utilisations rounded to two decimals.
pub fn generate_trace(rows: usize, shape: &TraceShape, seed: u64) -> Result<Vec<TraceRecord>, WorkloadError> {
    if shape.machines == 0 {
        return Err(WorkloadError::InvalidParameter("machines must be > 0".into()));
    }
    if !(shape.interval >= 0.0 && shape.interval.is_finite()) {
        return Err(WorkloadError::InvalidParameter(format!(
            "interval must be >= 0, got {}",
            shape.interval
        )));
    }
    check_range("cpu_utilisation", shape.cpu_utilisation, 0.0, false)?;
    check_range("memory_utilisation", shape.memory_utilisation, 0.0, false)?;
    check_range("disk_utilisation", shape.disk_utilisation, 0.0, false)?;
    for (name, r) in [
        ("cpu_utilisation", shape.cpu_utilisation),
        ("memory_utilisation", shape.memory_utilisation),
        ("disk_utilisation", shape.disk_utilisation),
    ] {
        if r[1] > 100.0 {
            return Err(WorkloadError::InvalidRange { name, lo: r[0], hi: r[1] });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..rows)
        .map(|i| {
            let machine = rng.gen_range(1..=shape.machines);
            TraceRecord {
                timestamp: i as f64 * shape.interval,
                machine_id: format!("m{machine}"),
                cpu_utilisation: percent(&mut rng, shape.cpu_utilisation),
                memory_utilisation: percent(&mut rng, shape.memory_utilisation),
                disk_utilisation: percent(&mut rng, shape.disk_utilisation),
            }
        })
        .collect())
}

pub fn bundled_trace() -> ParsedTrace {
    parse_trace_str(BUNDLED_TRACE, b',').expect("bundled trace parses")
}

/// Jobs derived from the bundled trace with the default mapping.
pub fn bundled_jobs() -> Vec<JobSpec> {
    jobs_from_trace(&bundled_trace().records, &TraceMapping::default()).expect("bundled trace has jobs")
}
