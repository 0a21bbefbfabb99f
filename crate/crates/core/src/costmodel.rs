//! Closed-form completion-time, energy and network cost functions.
//!
//! Every node is treated as an M/M/1 server: with service rate `mu` and
//! arrival rate `lambda` the mean time in system is `1 / (mu - lambda)`, and
//! the energy cost scales that by the node's average execution capacity.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{Hierarchy, JobId, JobSpec, Node, NodeId, REL_TOL};
use crate::schedulers::Schedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("node {node} is unstable: arrival rate {lambda} >= service rate {mu}")]
    UnstableQueue { node: NodeId, mu: f64, lambda: f64 },
    #[error("no candidate nodes")]
    EmptyCandidateSet,
    #[error("job {0} is not assigned exactly once")]
    UnassignedJob(JobId),
    #[error("node {node}: committed demand {demand} MIPS exceeds capacity {capacity} MIPS")]
    CapacityViolation {
        node: NodeId,
        demand: f64,
        capacity: f64,
    },
    #[error("schedule targets unknown node {0}")]
    UnknownNode(NodeId),
    #[error("simulation time must be > 0")]
    ZeroSimTime,
    #[error("workload span must be > 0")]
    ZeroSpan,
    #[error("job set is empty")]
    EmptyJobSet,
}

/// Per-tier and system cost, `Co_tier-t`, `Co_cdc` and `Co_sys`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub per_tier: BTreeMap<u32, f64>,
    pub cloud: f64,
    pub total: f64,
    /// Sum of `act` over all jobs, seconds.
    pub act_sum: f64,
    /// Sum of `aec` over all jobs.
    pub aec_sum: f64,
}

/// `length / capacity`, seconds.
pub fn execution_time(job: &JobSpec, node: &dyn Node) -> f64 {
    job.length / node.capacity()
}

/// `ct = bt + et + d`.
pub fn completion_time(job: &JobSpec, node: &dyn Node, begin: f64, delay: f64) -> f64 {
    begin + execution_time(job, node) + delay
}

/// One option for [`min_completion_time`].
#[derive(Clone, Copy)]
pub struct Candidate<'a> {
    pub node: &'a dyn Node,
    pub begin: f64,
    pub delay: f64,
}

/// The candidate finishing `job` earliest; ties go to the lowest tier, then
/// the lowest device index.
pub fn min_completion_time(
    job: &JobSpec,
    candidates: &[Candidate<'_>],
) -> Result<(NodeId, f64), CostError> {
    candidates
        .iter()
        .map(|c| (c.node.id(), completion_time(job, c.node, c.begin, c.delay)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or(CostError::EmptyCandidateSet)
}

/// `act = 1 / (mu - lambda)`.
pub fn avg_completion_cost(node: &dyn Node) -> Result<f64, CostError> {
    let (mu, lambda) = (node.service_rate(), node.assigned_rate());
    if !(mu > lambda) {
        return Err(CostError::UnstableQueue {
            node: node.id(),
            mu,
            lambda,
        });
    }
    Ok(1.0 / (mu - lambda))
}

/// `aec = acp * act`.
pub fn avg_energy_cost(node: &dyn Node) -> Result<f64, CostError> {
    Ok(node.energy_coeff() * avg_completion_cost(node)?)
}

/// Whether `node` still has `job.cpu_demand` MIPS to spare.
pub fn capacity_feasible(node: &dyn Node, job: &JobSpec) -> bool {
    node.spare_capacity() >= job.cpu_demand
}

/// Product over jobs of `P(demand <= capacity)`, where the probability is
/// the fraction of the job population that fits.
pub fn tier_feasibility_probability(jobs: &[JobSpec], tier_capacity: f64) -> Result<f64, CostError> {
    if jobs.is_empty() {
        return Err(CostError::EmptyJobSet);
    }
    let fits = jobs.iter().filter(|j| j.cpu_demand <= tier_capacity).count();
    let p = fits as f64 / jobs.len() as f64;
    Ok(jobs.iter().map(|_| p).product())
}

/// Data volume and aggregate delay of one finished job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferRecord {
    pub data_volume: f64,
    pub aggregate_delay: f64,
}

/// `NU = sum(dp * ad) / st`.
pub fn network_usage(records: &[TransferRecord], sim_time: f64) -> Result<f64, CostError> {
    if !(sim_time > 0.0) {
        return Err(CostError::ZeroSimTime);
    }
    let moved: f64 = records
        .iter()
        .map(|r| r.data_volume * r.aggregate_delay)
        .sum();
    Ok(moved / sim_time)
}

/// Checks that every job is assigned exactly once to a node of `hierarchy`
/// and that no fog device is committed beyond its capacity.
pub fn check_schedule(
    schedule: &Schedule,
    hierarchy: &Hierarchy,
    jobs: &[JobSpec],
) -> Result<(), CostError> {
    let known: BTreeSet<JobId> = jobs.iter().map(|j| j.id).collect();
    let mut seen = BTreeSet::new();
    for a in &schedule.assignments {
        if !known.contains(&a.job) || !seen.insert(a.job) {
            return Err(CostError::UnassignedJob(a.job));
        }
        if !hierarchy.contains(a.target) {
            return Err(CostError::UnknownNode(a.target));
        }
    }
    if let Some(missing) = known.difference(&seen).next() {
        return Err(CostError::UnassignedJob(*missing));
    }

    let demand: BTreeMap<JobId, f64> = jobs.iter().map(|j| (j.id, j.cpu_demand)).collect();
    let mut committed: BTreeMap<NodeId, f64> = BTreeMap::new();
    for a in schedule.assignments.iter().filter(|a| !a.target.is_cloud()) {
        *committed.entry(a.target).or_default() += demand[&a.job];
    }
    for (node, used) in committed {
        let capacity = hierarchy.node(node).map(|n| n.capacity()).unwrap_or(0.0);
        if used > capacity * (1.0 + REL_TOL) {
            return Err(CostError::CapacityViolation {
                node,
                demand: used,
                capacity,
            });
        }
    }
    Ok(())
}

/// Number of jobs per node, in node order.
fn jobs_per_node(schedule: &Schedule) -> BTreeMap<NodeId, usize> {
    let mut count = BTreeMap::new();
    for a in &schedule.assignments {
        *count.entry(a.target).or_insert(0) += 1;
    }
    count
}

/// System cost of a schedule. Each node's arrival rate is the number of jobs
/// assigned to it divided by `span` seconds; every job on the node then
/// contributes `act + aec` of that node.
pub fn system_cost(
    schedule: &Schedule,
    hierarchy: &Hierarchy,
    jobs: &[JobSpec],
    span: f64,
) -> Result<CostBreakdown, CostError> {
    check_schedule(schedule, hierarchy, jobs)?;
    let mut out = CostBreakdown::default();
    for tier in &hierarchy.tiers {
        out.per_tier.insert(tier.level, 0.0);
    }
    if jobs.is_empty() {
        return Ok(out);
    }
    if !(span > 0.0) {
        return Err(CostError::ZeroSpan);
    }

    for (id, n) in jobs_per_node(schedule) {
        let node = hierarchy.node(id).ok_or(CostError::UnknownNode(id))?;
        let loaded = LoadedNode {
            inner: node,
            lambda: node.assigned_rate() + n as f64 / span,
        };
        let act = avg_completion_cost(&loaded)?;
        let aec = avg_energy_cost(&loaded)?;
        let (act_sum, aec_sum) = (n as f64 * act, n as f64 * aec);
        out.act_sum += act_sum;
        out.aec_sum += aec_sum;
        match id {
            NodeId::Fog { tier, .. } => *out.per_tier.entry(tier).or_default() += act_sum + aec_sum,
            NodeId::Cloud => out.cloud += act_sum + aec_sum,
        }
    }
    out.total = out.per_tier.values().sum::<f64>() + out.cloud;
    Ok(out)
}

/// A node seen with extra arrival rate from a schedule.
struct LoadedNode<'a> {
    inner: &'a dyn Node,
    lambda: f64,
}

impl Node for LoadedNode<'_> {
    fn id(&self) -> NodeId {
        self.inner.id()
    }
    fn capacity(&self) -> f64 {
        self.inner.capacity()
    }
    fn service_rate(&self) -> f64 {
        self.inner.service_rate()
    }
    fn assigned_rate(&self) -> f64 {
        self.lambda
    }
    fn energy_coeff(&self) -> f64 {
        self.inner.energy_coeff()
    }
    fn spare_capacity(&self) -> f64 {
        self.inner.spare_capacity()
    }
    fn user_delay(&self) -> f64 {
        self.inner.user_delay()
    }
}
