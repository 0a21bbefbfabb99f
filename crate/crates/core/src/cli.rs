//! Command-line interface.
//!
//! Exit codes: 0 success, 1 runtime failure (or violations found by
//! `validate`), 2 usage or configuration error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::costmodel::CostBreakdown;
use crate::engine::{run, RunMetrics};
use crate::experiments::{
    run_throughput, summary_toml, sweep, write_throughput, Axis, Metric, SweepSpec, ThroughputSpec,
    DEFAULT_BASE_LOAD, DEFAULT_STEPS,
};
use crate::model::{DEFAULT_SEED, build_from_config, build_hierarchy, Hierarchy, JobSpec, Preset, ScenarioConfig};
use crate::schedulers::Algorithm;
use crate::workload::{
    bundled_trace, generate_trace, jobs_from_trace, parse_trace, scale_load, synth_jobs, write_trace,
    ParsedTrace, SynthRanges, TraceMapping, TraceShape, WorkloadError, BUNDLED_TRACE_ROWS,
    BUNDLED_TRACE_SEED,
};

pub const OUT_ENV: &str = "FOGSCHED_OUT";

#[derive(Debug, Parser)]
#[command(name = "fogsched", version, about = "Job scheduling on hierarchical fog-cloud topologies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Schedule and execute one workload on one topology.
    Run(RunArgs),
    /// Sweep job load, delay, device count or device speed.
    Sweep(SweepArgs),
    /// Check a topology (and optionally a trace) for invariant violations.
    Validate(ValidateArgs),
    /// Write a seeded synthetic trace.
    GenTrace(GenTraceArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScenarioArgs {
    /// Built-in topology: flat, two-tier, three-tier or four-tier.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Topology file (TOML).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorkloadArgs {
    /// Use N synthetic jobs instead of a trace.
    #[arg(long, value_name = "N", conflicts_with = "trace")]
    pub synth: Option<usize>,
    /// Trace file; the bundled trace is used when neither this nor --synth is given.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Field delimiter of the trace file.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// MIPS of demand per percent of CPU utilisation.
    #[arg(long, default_value_t = 20.0)]
    pub mips_per_percent: f64,
    /// Data units per percent of CPU utilisation.
    #[arg(long, default_value_t = 10.0)]
    pub data_per_percent: f64,
    /// Submit trace jobs at their timestamps instead of all at time zero.
    #[arg(long)]
    pub timed_arrivals: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// efsa, fifsa, ltf or cdc-only.
    #[arg(long, default_value = "efsa")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Job-load multiplier.
    #[arg(long, default_value_t = 1.0)]
    pub load: f64,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// job-load, delay, device-count, mips, or throughput.
    #[arg(long)]
    pub axis: String,
    /// Topologies to include (comma separated); all presets by default.
    #[arg(long, value_delimiter = ',')]
    pub preset: Vec<Preset>,
    /// Algorithms to include (comma separated); all by default.
    #[arg(long, value_delimiter = ',')]
    pub algo: Vec<Algorithm>,
    /// Explicit grid (comma separated). Delay values in ms, mips values are
    /// capacity increments, device-count values 0..=3 select cases a..d,
    /// throughput values are job counts.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    /// Grid points for delay (delay-step 5 ms) and mips (mips-step 300).
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    /// Metrics to write (tct, nu, cost); all by default.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<Metric>,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Job-load multiplier for axes other than job-load.
    #[arg(long, default_value_t = DEFAULT_BASE_LOAD)]
    pub load: f64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Also parse this trace and report rejected rows.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenTraceArgs {
    #[arg(long, default_value_t = BUNDLED_TRACE_ROWS)]
    pub rows: usize,
    #[arg(long, default_value_t = BUNDLED_TRACE_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = TraceShape::default().machines)]
    pub machines: u32,
    #[arg(long, default_value_t = TraceShape::default().cpu_utilisation[0])]
    pub cpu_min: f64,
    #[arg(long, default_value_t = TraceShape::default().cpu_utilisation[1])]
    pub cpu_max: f64,
    /// Seconds between rows.
    #[arg(long, default_value_t = TraceShape::default().interval)]
    pub interval: f64,
    /// Destination file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure tagged with the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
    /// `validate` found problems; they have already been printed.
    Violations(usize),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) | Failure::Violations(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => write!(f, "{e:#}"),
            Failure::Violations(n) => write!(f, "{n} violation(s)"),
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::GenTrace(a) => cmd_gen_trace(&a),
    }
}

fn delimiter_byte(c: char) -> Result<u8, Failure> {
    u8::try_from(c)
        .ok()
        .filter(|b| b.is_ascii())
        .ok_or_else(|| usage(anyhow!("delimiter must be a single ASCII character")))
}

fn read_scenario(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
    ScenarioConfig::from_toml(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn load_hierarchy(args: &ScenarioArgs, seed: u64) -> Result<Hierarchy, Failure> {
    match (&args.preset, &args.scenario) {
        (Some(p), _) => Ok(build_hierarchy(*p, seed)),
        (None, Some(path)) => {
            let cfg = read_scenario(path)?;
            build_from_config(&cfg).with_context(|| format!("building {}", path.display())).map_err(usage)
        }
        (None, None) => Err(usage(anyhow!("either --preset or --scenario is required"))),
    }
}

fn workload_error(e: WorkloadError) -> Failure {
    match e {
        WorkloadError::Io(_) | WorkloadError::Csv(_) => runtime(e),
        _ => usage(e),
    }
}

fn report_rejections(parsed: &ParsedTrace) {
    if parsed.rejected.is_empty() {
        return;
    }
    eprintln!("trace: {} row(s) rejected", parsed.rejected.len());
    for r in parsed.rejected.iter().take(10) {
        eprintln!("  line {}: {}", r.line, r.reason);
    }
}

fn load_jobs(args: &WorkloadArgs, seed: u64) -> Result<(Vec<JobSpec>, String), Failure> {
    if let Some(n) = args.synth {
        let jobs = synth_jobs(n, &SynthRanges::default(), seed).map_err(workload_error)?;
        return Ok((jobs, format!("synthetic:{n}:seed={seed}")));
    }
    let mapping = TraceMapping {
        base_mips_per_percent: args.mips_per_percent,
        data_per_percent: args.data_per_percent,
        batch: !args.timed_arrivals,
    };
    let (parsed, label) = match &args.trace {
        Some(path) => (
            parse_trace(path, delimiter_byte(args.delimiter)?).map_err(workload_error)?,
            format!("trace:{}", path.display()),
        ),
        None => (bundled_trace(), String::from("bundled-trace")),
    };
    report_rejections(&parsed);
    let jobs = jobs_from_trace(&parsed.records, &mapping).map_err(workload_error)?;
    Ok((jobs, label))
}

fn create_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(usage)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(runtime)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a str,
    algorithm: &'static str,
    seed: u64,
    load: f64,
    workload: &'a str,
    jobs: usize,
    tct: f64,
    network_usage: f64,
    sim_time: f64,
    cost: CostSummary,
}

#[derive(Serialize)]
struct CostSummary {
    total: f64,
    cloud: f64,
    act_sum: f64,
    aec_sum: f64,
    /// Keyed by tier level.
    tiers: BTreeMap<String, f64>,
}

impl From<&CostBreakdown> for CostSummary {
    fn from(c: &CostBreakdown) -> Self {
        CostSummary {
            total: c.total,
            cloud: c.cloud,
            act_sum: c.act_sum,
            aec_sum: c.aec_sum,
            tiers: c.per_tier.iter().map(|(t, v)| (t.to_string(), *v)).collect(),
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    if !(args.load > 0.0) {
        return Err(usage(anyhow!("--load must be > 0")));
    }
    let (jobs, label) = load_jobs(&args.workload, args.seed)?;
    let jobs = scale_load(&jobs, args.load).map_err(workload_error)?;
    let mut h = load_hierarchy(&args.scenario, args.seed)?;
    h.calibrate(&jobs);
    create_out_dir(&args.out)?;

    let schedule = args.algo.schedule(&jobs, &h);
    let metrics = run(&schedule, &h, &jobs).map_err(runtime)?;
    let stem = format!("run_{}_{}", h.name, args.algo.name());
    write_run(&args.out, &stem, &metrics, &RunSummary {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: &h.name,
        algorithm: args.algo.name(),
        seed: args.seed,
        load: args.load,
        workload: &label,
        jobs: jobs.len(),
        tct: metrics.total_completion_time,
        network_usage: metrics.network_usage,
        sim_time: metrics.sim_time,
        cost: CostSummary::from(&metrics.cost),
    })?;
    println!(
        "{} {}: {} jobs, tct {} s, network usage {}, cost {}",
        h.name,
        args.algo.name(),
        jobs.len(),
        metrics.total_completion_time,
        metrics.network_usage,
        metrics.cost.total
    );
    Ok(())
}

fn write_run(dir: &Path, stem: &str, metrics: &RunMetrics, summary: &RunSummary) -> Result<(), Failure> {
    let mut table = Vec::new();
    metrics.write_records(&mut table).map_err(runtime)?;
    write_file(&dir.join(format!("{stem}.csv")), &table)?;
    let text = toml::to_string(summary).map_err(runtime)?;
    write_file(&dir.join(format!("{stem}.summary.toml")), text.as_bytes())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    if args.jobs == 0 {
        return Err(usage(anyhow!("--jobs must be >= 1")));
    }
    let (jobs, label) = load_jobs(&args.workload, args.seed)?;
    let scenarios = if args.preset.is_empty() {
        Preset::ALL.to_vec()
    } else {
        args.preset.clone()
    };
    let algorithms = if args.algo.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        args.algo.clone()
    };

    if args.axis == "throughput" {
        return sweep_throughput(args, jobs, scenarios, algorithms);
    }
    let axis: Axis = args.axis.parse().map_err(|e: String| usage(anyhow!(e)))?;
    let spec = SweepSpec {
        scenarios,
        algorithms,
        axis,
        grid: if args.grid.is_empty() {
            axis.default_grid(args.steps)
        } else {
            args.grid.clone()
        },
        metrics: if args.metrics.is_empty() {
            Metric::ALL.to_vec()
        } else {
            args.metrics.clone()
        },
        seed: args.seed,
        base_load: args.load,
        jobs,
        workload: label,
        workers: args.jobs,
    };
    spec.validate().map_err(usage)?;
    create_out_dir(&args.out)?;
    let result = sweep(&spec).map_err(runtime)?;
    let mut table = Vec::new();
    result.write_table(&mut table).map_err(runtime)?;
    let stem = format!("sweep_{}", axis.name());
    write_file(&args.out.join(format!("{stem}.csv")), &table)?;
    write_file(
        &args.out.join(format!("{stem}.summary.toml")),
        summary_toml(&spec, &result).as_bytes(),
    )?;
    println!("{}: {} rows written to {}", axis, result.rows.len(), args.out.display());
    Ok(())
}

fn sweep_throughput(
    args: &SweepArgs,
    jobs: Vec<JobSpec>,
    scenarios: Vec<Preset>,
    algorithms: Vec<Algorithm>,
) -> Result<(), Failure> {
    let mut spec = ThroughputSpec::new(jobs, args.seed);
    spec.algorithms = algorithms;
    if !args.preset.is_empty() {
        spec.scenarios = scenarios;
    }
    if !args.grid.is_empty() {
        if args.grid.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(usage(anyhow!("throughput grid values must be positive job counts")));
        }
        spec.job_counts = args.grid.iter().map(|&v| v as usize).collect();
    }
    spec.jobs = scale_load(&spec.jobs, args.load).map_err(workload_error)?;
    create_out_dir(&args.out)?;
    let rows = run_throughput(&spec).map_err(usage)?;
    let mut table = Vec::new();
    write_throughput(&rows, &mut table).map_err(runtime)?;
    write_file(&args.out.join("sweep_throughput.csv"), &table)?;
    println!("throughput: {} rows written to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let mut problems = Vec::new();
    match (&args.scenario.preset, &args.scenario.scenario) {
        (Some(p), _) => problems.extend(build_hierarchy(*p, args.seed).validate().iter().map(|v| v.to_string())),
        (None, Some(path)) => {
            let cfg = read_scenario(path)?;
            match build_from_config(&cfg) {
                Ok(h) => problems.extend(h.validate().iter().map(|v| v.to_string())),
                Err(e) => problems.push(e.to_string()),
            }
        }
        (None, None) => return Err(usage(anyhow!("either --preset or --scenario is required"))),
    }
    if let Some(path) = &args.trace {
        match parse_trace(path, delimiter_byte(args.delimiter)?) {
            Ok(parsed) => {
                problems.extend(
                    parsed
                        .rejected
                        .iter()
                        .map(|r| format!("trace line {}: {}", r.line, r.reason)),
                );
            }
            Err(e @ WorkloadError::FileNotFound(_)) => return Err(usage(e)),
            Err(e) => problems.push(format!("trace: {e}")),
        }
    }
    if problems.is_empty() {
        println!("ok");
        return Ok(());
    }
    for p in &problems {
        println!("{p}");
    }
    Err(Failure::Violations(problems.len()))
}

fn cmd_gen_trace(args: &GenTraceArgs) -> Result<(), Failure> {
    let shape = TraceShape {
        machines: args.machines,
        cpu_utilisation: [args.cpu_min, args.cpu_max],
        interval: args.interval,
        ..TraceShape::default()
    };
    let records = generate_trace(args.rows, &shape, args.seed).map_err(usage)?;
    let mut buf = Vec::new();
    write_trace(&records, &mut buf, b',').map_err(runtime)?;
    match &args.out {
        Some(path) => write_file(path, &buf),
        None => std::io::stdout().write_all(&buf).map_err(runtime),
    }
}
