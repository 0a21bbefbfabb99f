//! Event-driven execution of a schedule.
//!
//! Every node is a single server. It works through its jobs in execution
//! order (commit order on fog devices, arrival order on the cloud); a job
//! starts at `max(arrival, node free)`, runs for `length / capacity` and is
//! done `d` seconds later, where `d` is the node's user-path delay.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::costmodel::{
    check_schedule, execution_time, network_usage, system_cost, CostBreakdown, CostError,
    TransferRecord,
};
use crate::model::{Hierarchy, JobId, JobSpec, NodeId, Tier};
use crate::schedulers::Schedule;

/// Width of the throughput buckets recorded in [`RunMetrics`], seconds.
pub const DEFAULT_BUCKET: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(CostError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobTiming {
    pub job: JobId,
    pub target: NodeId,
    pub tier: Tier,
    pub arrival: f64,
    pub bt: f64,
    pub et: f64,
    /// User-path delay of the executing node.
    pub delay: f64,
    pub ct: f64,
    pub data_volume: f64,
    /// Submission plus result-return delay.
    pub aggregate_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    /// One entry per job, ordered by job id.
    pub per_job: Vec<JobTiming>,
    pub total_completion_time: f64,
    pub network_usage: f64,
    /// `(bucket end, jobs completed by then)`.
    pub throughput_curve: Vec<(f64, usize)>,
    pub cost: CostBreakdown,
    pub sim_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Arrive,
    Complete,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
    node: NodeId,
    job: JobId,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
}

impl EventQueue {
    fn push(&mut self, time: f64, kind: EventKind, node: NodeId, job: JobId) {
        self.seq += 1;
        self.heap.push(Reverse(Event {
            time,
            seq: self.seq,
            kind,
            node,
            job,
        }));
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

struct NodeState {
    order: Vec<JobId>,
    next: usize,
    busy: bool,
}

/// Executes `schedule` and collects per-job timings and aggregate metrics.
pub fn run(schedule: &Schedule, hierarchy: &Hierarchy, jobs: &[JobSpec]) -> Result<RunMetrics, EngineError> {
    check_schedule(schedule, hierarchy, jobs).map_err(EngineError::InvalidSchedule)?;
    let by_id: BTreeMap<JobId, &JobSpec> = jobs.iter().map(|j| (j.id, j)).collect();

    let mut nodes: BTreeMap<NodeId, NodeState> = schedule
        .execution_order(jobs)
        .into_iter()
        .map(|(id, order)| {
            (
                id,
                NodeState {
                    order,
                    next: 0,
                    busy: false,
                },
            )
        })
        .collect();

    let mut events = EventQueue::default();
    for a in &schedule.assignments {
        events.push(by_id[&a.job].arrival_time, EventKind::Arrive, a.target, a.job);
    }

    let mut arrived: BTreeMap<JobId, bool> = BTreeMap::new();
    let mut timings: BTreeMap<JobId, JobTiming> = BTreeMap::new();
    while let Some(ev) = events.pop() {
        match ev.kind {
            EventKind::Arrive => {
                arrived.insert(ev.job, true);
            }
            EventKind::Complete => {
                nodes.get_mut(&ev.node).expect("known node").busy = false;
            }
        }
        let state = nodes.get_mut(&ev.node).expect("known node");
        if state.busy {
            continue;
        }
        let Some(&next) = state.order.get(state.next) else {
            continue;
        };
        if !arrived.get(&next).copied().unwrap_or(false) {
            continue;
        }
        let job = by_id[&next];
        let node = hierarchy.node(ev.node).expect("checked schedule");
        let et = execution_time(job, node);
        let delay = node.user_delay();
        let bt = ev.time;
        state.busy = true;
        state.next += 1;
        events.push(bt + et, EventKind::Complete, ev.node, next);
        timings.insert(
            next,
            JobTiming {
                job: next,
                target: ev.node,
                tier: ev.node.tier(),
                arrival: job.arrival_time,
                bt,
                et,
                delay,
                ct: bt + et + delay,
                data_volume: job.data_volume,
                aggregate_delay: 2.0 * delay,
            },
        );
    }

    let per_job: Vec<JobTiming> = timings.into_values().collect();
    let tct = per_job.iter().map(|t| t.ct).fold(0.0, f64::max);
    let sim_time = tct.ceil();
    let transfers: Vec<TransferRecord> = per_job
        .iter()
        .map(|t| TransferRecord {
            data_volume: t.data_volume,
            aggregate_delay: t.aggregate_delay,
        })
        .collect();
    let nu = if per_job.is_empty() {
        0.0
    } else {
        network_usage(&transfers, sim_time)?
    };
    let cost = system_cost(schedule, &loaded_rates(schedule, hierarchy, jobs), jobs, sim_time)?;

    let mut metrics = RunMetrics {
        per_job,
        total_completion_time: tct,
        network_usage: nu,
        throughput_curve: Vec::new(),
        cost,
        sim_time,
    };
    metrics.throughput_curve = throughput(&metrics, DEFAULT_BUCKET);
    Ok(metrics)
}

/// Copy of `hierarchy` where every node that received jobs serves at
/// `capacity / mean length` of those jobs, so that a node's M/M/1 load over
/// the simulated window equals its actual utilisation.
pub fn loaded_rates(schedule: &Schedule, hierarchy: &Hierarchy, jobs: &[JobSpec]) -> Hierarchy {
    let lengths: BTreeMap<JobId, f64> = jobs.iter().map(|j| (j.id, j.length)).collect();
    let mut work: BTreeMap<NodeId, (f64, usize)> = BTreeMap::new();
    for a in &schedule.assignments {
        let e = work.entry(a.target).or_default();
        e.0 += lengths.get(&a.job).copied().unwrap_or(0.0);
        e.1 += 1;
    }
    let mean = |id: NodeId| work.get(&id).map(|&(w, n)| w / n as f64);
    let mut h = hierarchy.clone();
    for d in h.tiers.iter_mut().flat_map(|t| t.devices.iter_mut()) {
        if let Some(m) = mean(d.id) {
            d.service_rate = d.capacity / m;
        }
    }
    if let Some(m) = mean(NodeId::Cloud) {
        h.cloud.service_rate = h.cloud.capacity / m;
    }
    h
}

/// Cumulative completed-job counts at every bucket boundary up to the last
/// completion.
pub fn throughput(metrics: &RunMetrics, bucket: f64) -> Vec<(f64, usize)> {
    assert!(bucket > 0.0, "bucket width must be positive");
    let mut done: Vec<f64> = metrics.per_job.iter().map(|t| t.ct).collect();
    if done.is_empty() {
        return Vec::new();
    }
    done.sort_by(f64::total_cmp);
    let last = *done.last().expect("non-empty");
    let buckets = ((last / bucket).ceil() as usize).max(1);
    (1..=buckets)
        .map(|k| {
            // Rounded so that edges print as 0.3 rather than 0.30000000000000004.
            let edge = (k as f64 * bucket * 1e9).round() / 1e9;
            (edge, done.partition_point(|&c| c <= edge))
        })
        .collect()
}

/// Column order of [`RunMetrics::write_records`].
pub const RECORD_HEADER: [&str; 16] = [
    "record", "job_id", "target", "tier", "arrival", "bt", "et", "delay", "ct", "data_volume",
    "aggregate_delay", "tct", "network_usage", "cost", "sim_time", "jobs",
];

impl RunMetrics {
    /// Writes one `job` row per job followed by one `summary` row.
    pub fn write_records<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RECORD_HEADER)?;
        for t in &self.per_job {
            w.write_record([
                "job".to_string(),
                t.job.to_string(),
                t.target.to_string(),
                t.tier.to_string(),
                t.arrival.to_string(),
                t.bt.to_string(),
                t.et.to_string(),
                t.delay.to_string(),
                t.ct.to_string(),
                t.data_volume.to_string(),
                t.aggregate_delay.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        let mut summary = vec![String::new(); RECORD_HEADER.len()];
        summary[0] = "summary".into();
        summary[11] = self.total_completion_time.to_string();
        summary[12] = self.network_usage.to_string();
        summary[13] = self.cost.total.to_string();
        summary[14] = self.sim_time.to_string();
        summary[15] = self.per_job.len().to_string();
        w.write_record(&summary)?;
        w.flush()?;
        Ok(())
    }

    pub fn timing(&self, job: JobId) -> Option<&JobTiming> {
        self.per_job
            .binary_search_by_key(&job, |t| t.job)
            .ok()
            .map(|i| &self.per_job[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hierarchy, Preset};
    use crate::schedulers::{Algorithm, Assignment};

    fn job(id: u32, length: f64) -> JobSpec {
        JobSpec::new(JobId(id), 10.0, length, 1.0, 0.0).unwrap()
    }

    fn flat_with_delay(d: f64) -> Hierarchy {
        let mut h = build_hierarchy(Preset::Flat, 0);
        for dev in h.tiers[0].devices.iter_mut() {
            dev.hop_delays = vec![d];
            dev.user_delay = d;
        }
        h.calibrate(&[job(0, 1.0)]);
        h
    }

    fn on(pairs: &[(u32, NodeId)]) -> Schedule {
        let mut s = Schedule::new(Algorithm::Efsa);
        for &(j, n) in pairs {
            s.assignments.push(Assignment::new(JobId(j), n));
        }
        s
    }

    const FD1: NodeId = NodeId::Fog { tier: 1, index: 1 };

    #[test]
    fn single_job_timing() {
        let h = flat_with_delay(0.002);
        let jobs = [job(0, 4000.0)];
        let m = run(&on(&[(0, FD1)]), &h, &jobs).unwrap();
        let t = &m.per_job[0];
        assert_eq!((t.bt, t.et), (0.0, 2.0));
        assert!((t.ct - 2.002).abs() < 1e-12);
        assert_eq!(m.total_completion_time, t.ct);
        assert_eq!(m.sim_time, 3.0);
    }

    #[test]
    fn jobs_queue_on_one_device() {
        let h = flat_with_delay(0.002);
        let jobs = [job(0, 2000.0), job(1, 2000.0)];
        let m = run(&on(&[(0, FD1), (1, FD1)]), &h, &jobs).unwrap();
        let second = m.timing(JobId(1)).unwrap();
        assert_eq!(second.bt, 1.0);
        assert_eq!(second.ct, 2.0 + 0.002);
    }

    #[test]
    fn late_arrival_waits() {
        let h = flat_with_delay(0.002);
        let jobs = [
            JobSpec::new(JobId(0), 10.0, 2000.0, 1.0, 0.0).unwrap(),
            JobSpec::new(JobId(1), 10.0, 2000.0, 1.0, 5.0).unwrap(),
        ];
        let m = run(&on(&[(0, FD1), (1, FD1)]), &h, &jobs).unwrap();
        assert_eq!(m.timing(JobId(1)).unwrap().bt, 5.0);
    }

    #[test]
    fn empty_schedule() {
        let h = flat_with_delay(0.002);
        let m = run(&on(&[]), &h, &[]).unwrap();
        assert_eq!(m.total_completion_time, 0.0);
        assert_eq!(m.network_usage, 0.0);
        assert!(m.throughput_curve.is_empty());
    }

    #[test]
    fn invalid_schedule_is_rejected() {
        let h = flat_with_delay(0.002);
        let jobs = [job(0, 1.0), job(1, 1.0)];
        assert!(matches!(
            run(&on(&[(0, FD1)]), &h, &jobs),
            Err(EngineError::InvalidSchedule(CostError::UnassignedJob(JobId(1))))
        ));
    }

    fn metrics_with(cts: &[f64]) -> RunMetrics {
        RunMetrics {
            per_job: cts
                .iter()
                .enumerate()
                .map(|(i, &ct)| JobTiming {
                    job: JobId(i as u32),
                    target: NodeId::Cloud,
                    tier: Tier::Cloud,
                    arrival: 0.0,
                    bt: 0.0,
                    et: 0.0,
                    delay: 0.0,
                    ct,
                    data_volume: 0.0,
                    aggregate_delay: 0.0,
                })
                .collect(),
            total_completion_time: cts.iter().copied().fold(0.0, f64::max),
            network_usage: 0.0,
            throughput_curve: vec![],
            cost: CostBreakdown::default(),
            sim_time: 0.0,
        }
    }

    #[test]
    fn throughput_examples() {
        let m = metrics_with(&[1.0, 1.5, 3.0]);
        assert_eq!(throughput(&m, 1.0), vec![(1.0, 1), (2.0, 2), (3.0, 3)]);
        assert!(throughput(&metrics_with(&[]), 1.0).is_empty());
        assert_eq!(throughput(&metrics_with(&[0.2, 0.5, 0.9]), 1.0), vec![(1.0, 3)]);
    }

    #[test]
    fn record_format() {
        let h = flat_with_delay(0.002);
        let jobs = [job(0, 4000.0)];
        let m = run(&on(&[(0, FD1)]), &h, &jobs).unwrap();
        let mut buf = Vec::new();
        m.write_records(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("record,job_id,target"));
        assert!(lines[1].starts_with("job,j0,fd1.1,1,0,0,2,0.002,2.002,"));
        assert!(lines[2].starts_with("summary,,,,,,,,,,,2.002,"));
    }
}
