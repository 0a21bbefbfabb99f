//! Batch scheduling strategies for a fog hierarchy.
//!
//! * [`fifsa`]: shortest-demand first, first device with enough spare
//!   capacity scanning tiers bottom-up, cloud as the fallback.
//! * [`efsa`]: partition jobs into per-tier queues by the lowest tier that
//!   can host them, then run Min-Min on each tier.
//! * [`ltf`]: longest job first onto the node that finishes it earliest.
//! * [`cdc_only`]: everything on the cloud.
//!
//! All fog placements respect remaining spare capacity; the cloud is never
//! capacity-bound. Jobs sent to the cloud run there first-come first-served
//! by arrival time, whichever strategy sent them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmodel::{completion_time, execution_time};
use crate::model::{FogDevice, Hierarchy, JobId, JobSpec, NodeId, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Efsa,
    Fifsa,
    Ltf,
    CdcOnly,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Efsa,
        Algorithm::Fifsa,
        Algorithm::Ltf,
        Algorithm::CdcOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Efsa => "efsa",
            Algorithm::Fifsa => "fifsa",
            Algorithm::Ltf => "ltf",
            Algorithm::CdcOnly => "cdc-only",
        }
    }

    pub fn schedule(self, jobs: &[JobSpec], hierarchy: &Hierarchy) -> Schedule {
        match self {
            Algorithm::Efsa => efsa(jobs, hierarchy),
            Algorithm::Fifsa => fifsa(jobs, hierarchy),
            Algorithm::Ltf => ltf(jobs, hierarchy),
            Algorithm::CdcOnly => cdc_only(jobs, hierarchy),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "efsa" => Ok(Algorithm::Efsa),
            "fifsa" => Ok(Algorithm::Fifsa),
            "ltf" => Ok(Algorithm::Ltf),
            "cdc-only" | "cdc" => Ok(Algorithm::CdcOnly),
            other => Err(format!(
                "unknown algorithm `{other}` (expected efsa, fifsa, ltf or cdc-only)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedError {
    #[error("queue is empty")]
    EmptyQueue,
    #[error("device set is empty")]
    EmptyDeviceSet,
    #[error("no queued job fits any device's spare capacity")]
    NoFeasiblePair,
}

/// One `x_tik = 1` entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub job: JobId,
    pub target: NodeId,
    pub tier: Tier,
    pub flag: bool,
}

impl Assignment {
    pub fn new(job: JobId, target: NodeId) -> Self {
        Assignment {
            job,
            target,
            tier: target.tier(),
            flag: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TierQueue {
    pub tier: Tier,
    pub jobs: Vec<JobId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub algorithm: Algorithm,
    /// Assignments in commit order.
    pub assignments: Vec<Assignment>,
    /// Queue partition the strategy worked from, when it builds one.
    pub queues: Vec<TierQueue>,
}

impl Schedule {
    pub fn new(algorithm: Algorithm) -> Self {
        Schedule {
            algorithm,
            assignments: Vec::new(),
            queues: Vec::new(),
        }
    }

    fn commit(&mut self, job: JobId, target: NodeId) {
        self.assignments.push(Assignment::new(job, target));
    }

    pub fn target_of(&self, job: JobId) -> Option<NodeId> {
        self.assignments.iter().find(|a| a.job == job).map(|a| a.target)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Jobs per node in the order each node executes them: commit order on
    /// fog devices, arrival order (then id) on the cloud.
    pub fn execution_order(&self, jobs: &[JobSpec]) -> BTreeMap<NodeId, Vec<JobId>> {
        let arrival: BTreeMap<JobId, f64> = jobs.iter().map(|j| (j.id, j.arrival_time)).collect();
        let mut order: BTreeMap<NodeId, Vec<JobId>> = BTreeMap::new();
        for a in &self.assignments {
            order.entry(a.target).or_default().push(a.job);
        }
        if let Some(cloud) = order.get_mut(&NodeId::Cloud) {
            cloud.sort_by(|a, b| {
                let (ta, tb) = (arrival.get(a), arrival.get(b));
                ta.partial_cmp(&tb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(b))
            });
        }
        order
    }
}

/// Committed load per device during one scheduling pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadState {
    /// Completion time of the last job committed to each device, seconds.
    pub cl: BTreeMap<NodeId, f64>,
    /// Remaining spare capacity per device, MIPS.
    pub spare: BTreeMap<NodeId, f64>,
}

impl LoadState {
    pub fn new<'a>(devices: impl IntoIterator<Item = &'a FogDevice>) -> Self {
        let mut s = LoadState::default();
        for d in devices {
            s.cl.insert(d.id, 0.0);
            s.spare.insert(d.id, d.spare_capacity);
        }
        s
    }

    pub fn current_load(&self, device: NodeId) -> f64 {
        self.cl.get(&device).copied().unwrap_or(0.0)
    }

    pub fn spare(&self, device: NodeId) -> f64 {
        self.spare.get(&device).copied().unwrap_or(0.0)
    }

    /// [`crate::costmodel::capacity_feasible`] against the spare capacity tracked here.
    fn fits(&self, device: &FogDevice, job: &JobSpec) -> bool {
        self.spare(device.id) >= job.cpu_demand
    }

    /// Completion time of `job` on `device` if started once its current load
    /// drains.
    pub fn completion_time(&self, job: &JobSpec, device: &FogDevice) -> f64 {
        completion_time(job, device, self.current_load(device.id), device.user_delay)
    }

    fn commit(&mut self, job: &JobSpec, device: &FogDevice, ct: f64) {
        self.cl.insert(device.id, ct);
        *self.spare.entry(device.id).or_insert(device.spare_capacity) -= job.cpu_demand;
    }
}

/// The pair committed by one Min-Min iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pick {
    pub device: NodeId,
    pub job: JobId,
    /// `cl(device) + et + d`.
    pub ct: f64,
}

/// Min-Min selection: over every (queued job, device) pair whose device can
/// still host the job, the one with the smallest completion time given the
/// device's current load. Ties go to the lower device, then the lower job.
pub fn min_min_node(
    queue: &[&JobSpec],
    load: &LoadState,
    devices: &[&FogDevice],
) -> Result<Pick, SchedError> {
    if queue.is_empty() {
        return Err(SchedError::EmptyQueue);
    }
    if devices.is_empty() {
        return Err(SchedError::EmptyDeviceSet);
    }
    let mut best: Option<Pick> = None;
    for job in queue {
        for device in devices.iter().filter(|d| load.fits(d, job)) {
            let ct = load.completion_time(job, device);
            let better = match &best {
                None => true,
                Some(b) => ct
                    .total_cmp(&b.ct)
                    .then(device.id.cmp(&b.device))
                    .then(job.id.cmp(&b.job))
                    .is_lt(),
            };
            if better {
                best = Some(Pick {
                    device: device.id,
                    job: job.id,
                    ct,
                });
            }
        }
    }
    best.ok_or(SchedError::NoFeasiblePair)
}

/// Result of one Min-Min pass over a queue.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MinMinOutcome {
    /// Scheduling list, in commit order.
    pub steps: Vec<Pick>,
    /// Queued jobs no device could host, in queue order.
    pub leftover: Vec<JobId>,
}

/// Repeats [`min_min_node`] until the queue is empty or nothing left fits,
/// committing each pick into `load`.
pub fn min_min(
    queue: &[&JobSpec],
    devices: &[&FogDevice],
    load: &mut LoadState,
) -> Result<MinMinOutcome, SchedError> {
    if devices.is_empty() {
        return Err(SchedError::EmptyDeviceSet);
    }
    let mut pending: Vec<&JobSpec> = queue.to_vec();
    let mut out = MinMinOutcome::default();
    while !pending.is_empty() {
        let pick = match min_min_node(&pending, load, devices) {
            Ok(p) => p,
            Err(SchedError::NoFeasiblePair) => break,
            Err(e) => return Err(e),
        };
        let pos = pending.iter().position(|j| j.id == pick.job).expect("picked from queue");
        let job = pending.remove(pos);
        let device = devices.iter().find(|d| d.id == pick.device).expect("picked device");
        load.commit(job, device, pick.ct);
        out.steps.push(pick);
    }
    out.leftover = pending.iter().map(|j| j.id).collect();
    Ok(out)
}

fn arrival_order(jobs: &[JobSpec]) -> Vec<&JobSpec> {
    let mut v: Vec<&JobSpec> = jobs.iter().collect();
    v.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time).then(a.id.cmp(&b.id)));
    v
}

/// Hierarchical First Fog Scheduling.
pub fn fifsa(jobs: &[JobSpec], hierarchy: &Hierarchy) -> Schedule {
    let mut order: Vec<&JobSpec> = jobs.iter().collect();
    order.sort_by(|a, b| a.cpu_demand.total_cmp(&b.cpu_demand).then(a.id.cmp(&b.id)));

    let mut load = LoadState::new(hierarchy.devices());
    let mut schedule = Schedule::new(Algorithm::Fifsa);
    schedule.queues.push(TierQueue {
        tier: Tier::Fog(1),
        jobs: order.iter().map(|j| j.id).collect(),
    });
    for job in order {
        let target = hierarchy
            .devices()
            .find(|d| load.fits(d, job))
            .map(|d| {
                let ct = load.completion_time(job, d);
                load.commit(job, d, ct);
                d.id
            })
            .unwrap_or(NodeId::Cloud);
        schedule.commit(job.id, target);
    }
    schedule
}

/// Lowest tier whose per-device capacity covers the job's demand.
pub fn lowest_feasible_tier(job: &JobSpec, hierarchy: &Hierarchy) -> Tier {
    hierarchy
        .tiers
        .iter()
        .find(|t| t.capacity() >= job.cpu_demand)
        .map_or(Tier::Cloud, |t| Tier::Fog(t.level))
}

/// Hierarchical Elected Fog Scheduling.
///
/// Jobs a tier cannot host once its devices' spare capacity runs out are
/// handed to the next tier's Min-Min pass, and finally to the cloud.
pub fn efsa(jobs: &[JobSpec], hierarchy: &Hierarchy) -> Schedule {
    let by_id: BTreeMap<JobId, &JobSpec> = jobs.iter().map(|j| (j.id, j)).collect();
    let mut queues: BTreeMap<Tier, Vec<JobId>> = hierarchy
        .tiers
        .iter()
        .map(|t| (Tier::Fog(t.level), Vec::new()))
        .chain([(Tier::Cloud, Vec::new())])
        .collect();
    for job in arrival_order(jobs) {
        queues
            .get_mut(&lowest_feasible_tier(job, hierarchy))
            .expect("tier queue")
            .push(job.id);
    }

    let mut schedule = Schedule::new(Algorithm::Efsa);
    schedule.queues = queues
        .iter()
        .map(|(&tier, jobs)| TierQueue {
            tier,
            jobs: jobs.clone(),
        })
        .collect();

    let mut load = LoadState::new(hierarchy.devices());
    let mut carried: Vec<JobId> = Vec::new();
    for tier in &hierarchy.tiers {
        let mut queue = std::mem::take(&mut carried);
        queue.extend(&queues[&Tier::Fog(tier.level)]);
        if queue.is_empty() {
            continue;
        }
        let queued: Vec<&JobSpec> = queue.iter().map(|id| by_id[id]).collect();
        let devices: Vec<&FogDevice> = tier.devices.iter().collect();
        let outcome = min_min(&queued, &devices, &mut load).expect("tiers are non-empty");
        for step in &outcome.steps {
            schedule.commit(step.job, step.device);
        }
        carried = outcome.leftover;
    }

    let mut cloud: Vec<&JobSpec> = queues[&Tier::Cloud]
        .iter()
        .chain(&carried)
        .map(|id| by_id[id])
        .collect();
    cloud.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time).then(a.id.cmp(&b.id)));
    for job in cloud {
        schedule.commit(job.id, NodeId::Cloud);
    }
    schedule
}

/// Device pool used by [`ltf`], split around the mean pool speed.
#[derive(Debug, Clone, PartialEq)]
pub struct LtfPool {
    pub slow: Vec<NodeId>,
    pub fast: Vec<NodeId>,
}

impl LtfPool {
    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.slow.iter().chain(&self.fast).copied()
    }
}

/// The tier-1 devices plus the first device of the top tier. Nodes below the
/// mean pool MIPS are slow, nodes above it fast.
pub fn ltf_pool(hierarchy: &Hierarchy) -> LtfPool {
    let mut members: Vec<&FogDevice> = hierarchy
        .tiers
        .first()
        .map(|t| t.devices.iter().collect())
        .unwrap_or_default();
    if hierarchy.tiers.len() > 1 {
        if let Some(top) = hierarchy.tiers.last().and_then(|t| t.devices.first()) {
            members.push(top);
        }
    }
    let mean = members.iter().map(|d| d.capacity).sum::<f64>() / members.len().max(1) as f64;
    let mut pool = LtfPool {
        slow: Vec::new(),
        fast: Vec::new(),
    };
    for d in members {
        if d.capacity > mean {
            pool.fast.push(d.id);
        } else {
            pool.slow.push(d.id);
        }
    }
    pool
}

/// Longest Time First.
pub fn ltf(jobs: &[JobSpec], hierarchy: &Hierarchy) -> Schedule {
    let pool: Vec<&FogDevice> = ltf_pool(hierarchy)
        .members()
        .filter_map(|id| hierarchy.device(id))
        .collect();
    let mut schedule = Schedule::new(Algorithm::Ltf);
    let mut order: Vec<&JobSpec> = jobs.iter().collect();
    if let Some(reference) = pool.iter().min_by(|a, b| a.capacity.total_cmp(&b.capacity)) {
        order.sort_by(|a, b| {
            execution_time(b, *reference)
                .total_cmp(&execution_time(a, *reference))
                .then(a.id.cmp(&b.id))
        });
    }

    let mut load = LoadState::new(pool.iter().copied());
    for job in order {
        let best = pool
            .iter()
            .filter(|d| load.fits(d, job))
            .map(|d| (load.completion_time(job, d), *d))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
        let target = match best {
            Some((ct, d)) => {
                load.commit(job, d, ct);
                d.id
            }
            None => NodeId::Cloud,
        };
        schedule.commit(job.id, target);
    }
    schedule
}

/// Every job on the cloud, in arrival order.
pub fn cdc_only(jobs: &[JobSpec], _hierarchy: &Hierarchy) -> Schedule {
    let mut schedule = Schedule::new(Algorithm::CdcOnly);
    let order = arrival_order(jobs);
    schedule.queues.push(TierQueue {
        tier: Tier::Cloud,
        jobs: order.iter().map(|j| j.id).collect(),
    });
    for job in order {
        schedule.commit(job.id, NodeId::Cloud);
    }
    schedule
}
