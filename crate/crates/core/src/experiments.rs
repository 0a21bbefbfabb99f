//! Parameter sweeps over job load, link delay, device count and device speed,
//! plus throughput curves for small batches.
//!
//! Every sweep evaluates a grid of independent cells (scenario × axis value ×
//! algorithm). Cells may run on a worker pool; rows always come back in grid
//! order, so output is identical for any worker count.
//!
//! Table columns, in order: `scenario, seed, algorithm, axis, axis_value,
//! case, jobs`, then the selected metrics among `tct, network_usage, cost`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{run, throughput, EngineError, RunMetrics};
use crate::model::{build_hierarchy, Hierarchy, JobSpec, Preset};
use crate::schedulers::Algorithm;
use crate::workload::{scale_load, WorkloadError, LOAD_GRID};

/// Added to fog user-path delays at each delay step, seconds.
pub const DELAY_STEP_S: f64 = 0.005;
/// Added to every fog device's capacity at each MIPS step.
pub const MIPS_STEP: f64 = 300.0;
pub const DEFAULT_STEPS: usize = 6;
/// Load multiplier used by every axis except job load: the top of the load
/// grid, where the fog layer is saturated and the cloud carries the rest.
pub const DEFAULT_BASE_LOAD: f64 = 4.0;
pub const THROUGHPUT_COUNTS: [usize; 5] = [5, 10, 15, 20, 25];
/// Bucket width of throughput curves, seconds.
pub const THROUGHPUT_BUCKET: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    JobLoad,
    Delay,
    DeviceCount,
    Mips,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::JobLoad, Axis::Delay, Axis::DeviceCount, Axis::Mips];

    pub fn name(self) -> &'static str {
        match self {
            Axis::JobLoad => "job-load",
            Axis::Delay => "delay",
            Axis::DeviceCount => "device-count",
            Axis::Mips => "mips",
        }
    }

    /// Default grid with `steps` points. Delay values are offsets in ms,
    /// MIPS values are capacity increments, device-count values index
    /// [`DeviceCase::ALL`]. The job-load grid ignores `steps`.
    pub fn default_grid(self, steps: usize) -> Vec<f64> {
        match self {
            Axis::JobLoad => LOAD_GRID.to_vec(),
            Axis::Delay => (0..steps).map(|k| k as f64 * DELAY_STEP_S * 1000.0).collect(),
            Axis::DeviceCount => (0..DeviceCase::ALL.len()).map(|k| k as f64).collect(),
            Axis::Mips => (0..steps).map(|k| k as f64 * MIPS_STEP).collect(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axis {s:?} (expected job-load, delay, device-count or mips)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Tct,
    NetworkUsage,
    Cost,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Tct, Metric::NetworkUsage, Metric::Cost];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Tct => "tct",
            Metric::NetworkUsage => "network_usage",
            Metric::Cost => "cost",
        }
    }

    pub fn of(self, m: &RunMetrics) -> f64 {
        match self {
            Metric::Tct => m.total_completion_time,
            Metric::NetworkUsage => m.network_usage,
            Metric::Cost => m.cost.total,
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tct" => Ok(Metric::Tct),
            "nu" | "network_usage" | "network-usage" => Ok(Metric::NetworkUsage),
            "cost" => Ok(Metric::Cost),
            _ => Err(format!("unknown metric {s:?} (expected tct, nu or cost)")),
        }
    }
}

/// Device-removal cases of the device-count sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DeviceCase {
    /// Full hierarchy.
    A,
    /// One device fewer on tiers 1 and 2.
    B,
    /// Tier-3 device removed.
    C,
    /// Tier-4 device removed.
    D,
}

impl DeviceCase {
    pub const ALL: [DeviceCase; 4] = [DeviceCase::A, DeviceCase::B, DeviceCase::C, DeviceCase::D];

    pub fn label(self) -> &'static str {
        match self {
            DeviceCase::A => "a",
            DeviceCase::B => "b",
            DeviceCase::C => "c",
            DeviceCase::D => "d",
        }
    }

    pub fn apply(self, h: Hierarchy) -> Hierarchy {
        match self {
            DeviceCase::A => h,
            DeviceCase::B => h.without_last_device(1).without_last_device(2),
            DeviceCase::C => h.without_last_device(3),
            DeviceCase::D => h.without_last_device(4),
        }
    }

    fn from_value(v: f64) -> Option<DeviceCase> {
        if v.fract() != 0.0 || v < 0.0 {
            return None;
        }
        DeviceCase::ALL.get(v as usize).copied()
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("{scenario} / {algorithm} at {axis} = {value}: {source}")]
    Cell {
        scenario: String,
        algorithm: &'static str,
        axis: Axis,
        value: f64,
        source: EngineError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenarios: Vec<Preset>,
    pub algorithms: Vec<Algorithm>,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub metrics: Vec<Metric>,
    pub seed: u64,
    /// Load multiplier for axes other than job load.
    pub base_load: f64,
    /// Unscaled job set.
    pub jobs: Vec<JobSpec>,
    /// Describes where `jobs` came from; copied into the summary.
    pub workload: String,
    /// Worker threads; 1 evaluates cells serially.
    pub workers: usize,
}

impl SweepSpec {
    /// All presets and algorithms, all metrics, the axis's default grid.
    pub fn new(axis: Axis, jobs: Vec<JobSpec>, seed: u64) -> Self {
        SweepSpec {
            scenarios: Preset::ALL.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            axis,
            grid: axis.default_grid(DEFAULT_STEPS),
            metrics: Metric::ALL.to_vec(),
            seed,
            base_load: DEFAULT_BASE_LOAD,
            jobs,
            workload: String::from("custom"),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidSpec(m.to_string()));
        if self.grid.is_empty() {
            return bad("grid is empty");
        }
        if !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return bad("grid must be strictly increasing");
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return bad("grid values must be finite");
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms selected");
        }
        if self.scenarios.is_empty() {
            return bad("no scenarios selected");
        }
        if self.metrics.is_empty() {
            return bad("no metrics selected");
        }
        if self.jobs.is_empty() {
            return bad("job set is empty");
        }
        if self.workers == 0 {
            return bad("worker count must be >= 1");
        }
        if !(self.base_load > 0.0) {
            return bad("base load must be > 0");
        }
        match self.axis {
            Axis::JobLoad if self.grid[0] <= 0.0 => bad("load multipliers must be > 0"),
            Axis::Delay if self.grid[0] < 0.0 => bad("delay offsets must be >= 0"),
            Axis::Mips if self.grid[0] < 0.0 => bad("capacity increments must be >= 0"),
            Axis::DeviceCount if self.grid.iter().any(|&v| DeviceCase::from_value(v).is_none()) => {
                bad("device-count grid values must be case indices 0..=3")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: &'static str,
    pub seed: u64,
    pub algorithm: &'static str,
    pub axis: Axis,
    pub axis_value: f64,
    /// Device case label on the device-count axis, empty otherwise.
    pub case: &'static str,
    pub jobs: usize,
    pub tct: f64,
    pub network_usage: f64,
    pub cost: f64,
}

impl Row {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Tct => self.tct,
            Metric::NetworkUsage => self.network_usage,
            Metric::Cost => self.cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    pub metrics: Vec<Metric>,
}

impl SweepResult {
    pub fn find(&self, scenario: Preset, algorithm: Algorithm, axis_value: f64) -> Option<&Row> {
        self.rows.iter().find(|r| {
            r.scenario == scenario.name() && r.algorithm == algorithm.name() && r.axis_value == axis_value
        })
    }

    pub fn write_table<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["scenario", "seed", "algorithm", "axis", "axis_value", "case", "jobs"];
        header.extend(self.metrics.iter().map(|m| m.name()));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.scenario.to_string(),
                r.seed.to_string(),
                r.algorithm.to_string(),
                r.axis.to_string(),
                r.axis_value.to_string(),
                r.case.to_string(),
                r.jobs.to_string(),
            ];
            rec.extend(self.metrics.iter().map(|&m| r.metric(m).to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The hierarchy and job set one cell runs on, service rates calibrated.
pub fn cell_inputs(spec: &SweepSpec, scenario: Preset, value: f64) -> Result<(Hierarchy, Vec<JobSpec>), ExperimentError> {
    let load = if spec.axis == Axis::JobLoad { value } else { spec.base_load };
    let jobs = scale_load(&spec.jobs, load)?;
    let base = build_hierarchy(scenario, spec.seed);
    let mut h = match spec.axis {
        Axis::JobLoad => base,
        Axis::Delay => base.with_delay_offset(value / 1000.0),
        Axis::Mips => base.with_capacity_increment(value),
        Axis::DeviceCount => DeviceCase::from_value(value)
            .ok_or_else(|| ExperimentError::InvalidSpec(format!("no device case {value}")))?
            .apply(base),
    };
    h.calibrate(&jobs);
    Ok((h, jobs))
}

/// Runs a single grid cell from scratch.
pub fn run_cell(
    spec: &SweepSpec,
    scenario: Preset,
    value: f64,
    algorithm: Algorithm,
) -> Result<RunMetrics, ExperimentError> {
    let (h, jobs) = cell_inputs(spec, scenario, value)?;
    let schedule = algorithm.schedule(&jobs, &h);
    run(&schedule, &h, &jobs).map_err(|source| ExperimentError::Cell {
        scenario: scenario.name().to_string(),
        algorithm: algorithm.name(),
        axis: spec.axis,
        value,
        source,
    })
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    if workers == 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Evaluates every cell of `spec`; rows are ordered by scenario, then axis
/// value, then algorithm.
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let cells: Vec<(Preset, f64, Algorithm)> = spec
        .scenarios
        .iter()
        .flat_map(|&s| {
            spec.grid
                .iter()
                .flat_map(move |&v| spec.algorithms.iter().map(move |&a| (s, v, a)))
        })
        .collect();
    let eval = |&(scenario, value, algorithm): &(Preset, f64, Algorithm)| -> Result<Row, ExperimentError> {
        let m = run_cell(spec, scenario, value, algorithm)?;
        Ok(Row {
            scenario: scenario.name(),
            seed: spec.seed,
            algorithm: algorithm.name(),
            axis: spec.axis,
            axis_value: value,
            case: match spec.axis {
                Axis::DeviceCount => DeviceCase::from_value(value).map(DeviceCase::label).unwrap_or(""),
                _ => "",
            },
            jobs: m.per_job.len(),
            tct: m.total_completion_time,
            network_usage: m.network_usage,
            cost: m.cost.total,
        })
    };
    let rows: Result<Vec<Row>, ExperimentError> = if spec.workers == 1 {
        cells.iter().map(eval).collect()
    } else {
        in_pool(spec.workers, || cells.par_iter().map(eval).collect())?
    };
    Ok(SweepResult {
        rows: rows?,
        metrics: spec.metrics.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputRow {
    pub scenario: &'static str,
    pub seed: u64,
    pub algorithm: &'static str,
    pub job_count: usize,
    pub bucket_end: f64,
    pub completed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputSpec {
    pub scenarios: Vec<Preset>,
    pub algorithms: Vec<Algorithm>,
    pub job_counts: Vec<usize>,
    pub bucket: f64,
    pub seed: u64,
    /// Batches take the first `job_count` jobs of this set.
    pub jobs: Vec<JobSpec>,
}

impl ThroughputSpec {
    pub fn new(jobs: Vec<JobSpec>, seed: u64) -> Self {
        ThroughputSpec {
            scenarios: vec![Preset::TwoTier],
            algorithms: Algorithm::ALL.to_vec(),
            job_counts: THROUGHPUT_COUNTS.to_vec(),
            bucket: THROUGHPUT_BUCKET,
            seed,
            jobs,
        }
    }
}

/// Cumulative-completion curves per (scenario, job count, algorithm).
pub fn run_throughput(spec: &ThroughputSpec) -> Result<Vec<ThroughputRow>, ExperimentError> {
    if !(spec.bucket > 0.0) {
        return Err(ExperimentError::InvalidSpec("bucket width must be > 0".into()));
    }
    if spec.algorithms.is_empty() || spec.scenarios.is_empty() || spec.job_counts.is_empty() {
        return Err(ExperimentError::InvalidSpec("empty selection".into()));
    }
    if let Some(&n) = spec.job_counts.iter().find(|&&n| n == 0 || n > spec.jobs.len()) {
        return Err(ExperimentError::InvalidSpec(format!(
            "job count {n} outside 1..={}",
            spec.jobs.len()
        )));
    }
    let mut rows = Vec::new();
    for &scenario in &spec.scenarios {
        for &n in &spec.job_counts {
            let jobs = &spec.jobs[..n];
            let mut h = build_hierarchy(scenario, spec.seed);
            h.calibrate(jobs);
            for &algorithm in &spec.algorithms {
                let m = run(&algorithm.schedule(jobs, &h), &h, jobs).map_err(|source| ExperimentError::Cell {
                    scenario: scenario.name().to_string(),
                    algorithm: algorithm.name(),
                    axis: Axis::JobLoad,
                    value: 1.0,
                    source,
                })?;
                rows.extend(throughput(&m, spec.bucket).into_iter().map(|(end, done)| ThroughputRow {
                    scenario: scenario.name(),
                    seed: spec.seed,
                    algorithm: algorithm.name(),
                    job_count: n,
                    bucket_end: end,
                    completed: done,
                }));
            }
        }
    }
    Ok(rows)
}

pub fn write_throughput<W: Write>(rows: &[ThroughputRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "seed", "algorithm", "job_count", "bucket_end", "completed"])?;
    for r in rows {
        w.write_record([
            r.scenario.to_string(),
            r.seed.to_string(),
            r.algorithm.to_string(),
            r.job_count.to_string(),
            r.bucket_end.to_string(),
            r.completed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Completed count of `curve` at time `t`; a curve that has ended stays at
/// its final value.
pub fn completed_at(curve: &[(f64, usize)], t: f64) -> usize {
    curve
        .iter()
        .take_while(|&&(end, _)| end <= t + 1e-12)
        .last()
        .map(|&(_, n)| n)
        .unwrap_or(0)
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    tool: &'static str,
    version: &'static str,
    axis: &'static str,
    grid: &'a [f64],
    scenarios: Vec<&'static str>,
    algorithms: Vec<&'static str>,
    metrics: Vec<&'static str>,
    seed: u64,
    base_load: f64,
    workload: &'a str,
    jobs: usize,
    rows: usize,
}

/// Companion key-value file recording what produced a table.
pub fn summary_toml(spec: &SweepSpec, result: &SweepResult) -> String {
    let s = Summary {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        axis: spec.axis.name(),
        grid: &spec.grid,
        scenarios: spec.scenarios.iter().map(|p| p.name()).collect(),
        algorithms: spec.algorithms.iter().map(|a| a.name()).collect(),
        metrics: spec.metrics.iter().map(|m| m.name()).collect(),
        seed: spec.seed,
        base_load: spec.base_load,
        workload: &spec.workload,
        jobs: spec.jobs.len(),
        rows: result.rows.len(),
    };
    toml::to_string(&s).expect("summary serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{synth_jobs, SynthRanges};

    fn jobs() -> Vec<JobSpec> {
        synth_jobs(30, &SynthRanges::default(), 3).unwrap()
    }

    #[test]
    fn default_grids() {
        assert_eq!(Axis::JobLoad.default_grid(DEFAULT_STEPS).len(), 6);
        assert_eq!(Axis::Delay.default_grid(4), vec![0.0, 5.0, 10.0, 15.0]);
        let mips = Axis::Mips.default_grid(DEFAULT_STEPS);
        assert_eq!(2000.0 + mips.last().unwrap(), 3500.0);
        assert_eq!(Axis::DeviceCount.default_grid(9).len(), 4);
    }

    #[test]
    fn axis_names_round_trip() {
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        assert!("speed".parse::<Axis>().is_err());
    }

    #[test]
    fn single_cell_grid() {
        let mut spec = SweepSpec::new(Axis::JobLoad, jobs(), 1);
        spec.grid = vec![1.0];
        spec.algorithms = vec![Algorithm::Efsa];
        spec.scenarios = vec![Preset::FourTier];
        assert_eq!(sweep(&spec).unwrap().rows.len(), 1);
    }

    #[test]
    fn rejects_bad_grids() {
        let mut spec = SweepSpec::new(Axis::JobLoad, jobs(), 1);
        spec.grid = vec![2.0, 1.0];
        assert!(matches!(sweep(&spec), Err(ExperimentError::InvalidSpec(_))));
        spec.grid = vec![];
        assert!(sweep(&spec).is_err());
        let mut spec = SweepSpec::new(Axis::DeviceCount, jobs(), 1);
        spec.grid = vec![0.0, 7.0];
        assert!(sweep(&spec).is_err());
    }

    #[test]
    fn parallel_matches_serial() {
        let mut spec = SweepSpec::new(Axis::Delay, jobs(), 5);
        spec.grid = vec![0.0, 5.0];
        let serial = sweep(&spec).unwrap();
        spec.workers = 3;
        assert_eq!(sweep(&spec).unwrap(), serial);
    }

    #[test]
    fn table_header() {
        let mut spec = SweepSpec::new(Axis::JobLoad, jobs(), 1);
        spec.grid = vec![1.0];
        spec.scenarios = vec![Preset::Flat];
        spec.algorithms = vec![Algorithm::CdcOnly];
        spec.metrics = vec![Metric::Tct];
        let mut buf = Vec::new();
        sweep(&spec).unwrap().write_table(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "scenario,seed,algorithm,axis,axis_value,case,jobs,tct");
        assert!(lines.next().unwrap().starts_with("flat,1,cdc-only,job-load,1,,30,"));
    }

    #[test]
    fn summary_records_config() {
        let mut spec = SweepSpec::new(Axis::Mips, jobs(), 9);
        spec.grid = vec![0.0];
        spec.scenarios = vec![Preset::Flat];
        let result = sweep(&spec).unwrap();
        let text = summary_toml(&spec, &result);
        let parsed: toml::Value = toml::from_str(&text).unwrap();
        assert_eq!(parsed["seed"].as_integer(), Some(9));
        assert_eq!(parsed["axis"].as_str(), Some("mips"));
        assert_eq!(parsed["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn completed_at_holds_final_value() {
        let curve = [(0.1, 1), (0.2, 3)];
        assert_eq!(completed_at(&curve, 0.05), 0);
        assert_eq!(completed_at(&curve, 0.1), 1);
        assert_eq!(completed_at(&curve, 5.0), 3);
    }
}
