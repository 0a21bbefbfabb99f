//! Jobs, fog devices, the cloud data center and the tiered hierarchy that
//! connects them to users.
//!
//! A hierarchy is always built from a [`ScenarioConfig`]; the four preset
//! topologies are just canned configs. Every device draws its per-hop link
//! delays from its own RNG stream keyed by `(seed, tier, index)`, so the same
//! device gets the same delays in every topology that contains it. Removing a
//! tier or a device therefore leaves the rest of the hierarchy untouched.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean job length (MI) assumed for service rates before a job set is
/// attached with [`Hierarchy::calibrate`].
pub const DEFAULT_MEAN_LENGTH_MI: f64 = 1000.0;

/// Relative tolerance used for floating point invariant checks.
pub const REL_TOL: f64 = 1e-9;

/// Seed used for per-device delay draws when none is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JobId(pub u32);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j{}", self.0)
    }
}

/// One schedulable, independent job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub id: JobId,
    /// CPU requirement in MIPS, compared against device capacity.
    pub cpu_demand: f64,
    /// Work to execute, in millions of instructions.
    pub length: f64,
    /// Data units processed (sent and received) by the job.
    pub data_volume: f64,
    /// Seconds since the start of the run.
    pub arrival_time: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JobError {
    #[error("job {0}: cpu demand must be > 0, got {1}")]
    NonPositiveDemand(JobId, f64),
    #[error("job {0}: length must be > 0, got {1}")]
    NonPositiveLength(JobId, f64),
    #[error("job {0}: data volume must be >= 0, got {1}")]
    NegativeDataVolume(JobId, f64),
    #[error("job {0}: arrival time must be >= 0, got {1}")]
    NegativeArrival(JobId, f64),
    #[error("duplicate job id {0}")]
    DuplicateId(JobId),
}

impl JobSpec {
    pub fn new(
        id: JobId,
        cpu_demand: f64,
        length: f64,
        data_volume: f64,
        arrival_time: f64,
    ) -> Result<Self, JobError> {
        let job = JobSpec {
            id,
            cpu_demand,
            length,
            data_volume,
            arrival_time,
        };
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> Result<(), JobError> {
        // Written as negated comparisons so NaN is rejected too.
        if !(self.cpu_demand > 0.0) || !self.cpu_demand.is_finite() {
            return Err(JobError::NonPositiveDemand(self.id, self.cpu_demand));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(JobError::NonPositiveLength(self.id, self.length));
        }
        if !(self.data_volume >= 0.0) {
            return Err(JobError::NegativeDataVolume(self.id, self.data_volume));
        }
        if !(self.arrival_time >= 0.0) {
            return Err(JobError::NegativeArrival(self.id, self.arrival_time));
        }
        Ok(())
    }
}

/// Checks every job and that ids are unique within the set.
pub fn validate_jobs(jobs: &[JobSpec]) -> Result<(), JobError> {
    let mut seen = std::collections::BTreeSet::new();
    for job in jobs {
        job.validate()?;
        if !seen.insert(job.id) {
            return Err(JobError::DuplicateId(job.id));
        }
    }
    Ok(())
}

/// Identifies an execution node. Ordering is by tier, then index, with the
/// cloud last, which is also the tie-break order used by the schedulers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeId {
    Fog { tier: u32, index: u32 },
    Cloud,
}

impl NodeId {
    pub fn tier(&self) -> Tier {
        match self {
            NodeId::Fog { tier, .. } => Tier::Fog(*tier),
            NodeId::Cloud => Tier::Cloud,
        }
    }

    pub fn is_cloud(&self) -> bool {
        matches!(self, NodeId::Cloud)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Fog { tier, index } => write!(f, "fd{tier}.{index}"),
            NodeId::Cloud => f.write_str("cdc"),
        }
    }
}

/// A fog tier level (1-based) or the cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Fog(u32),
    Cloud,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tier::Fog(t) => write!(f, "{t}"),
            Tier::Cloud => f.write_str("cloud"),
        }
    }
}

/// Common view over fog devices and the cloud used by the cost model.
pub trait Node {
    fn id(&self) -> NodeId;
    /// MIPS.
    fn capacity(&self) -> f64;
    /// Jobs per second.
    fn service_rate(&self) -> f64;
    /// Jobs per second.
    fn assigned_rate(&self) -> f64;
    /// Average job execution capacity, MIPS.
    fn energy_coeff(&self) -> f64;
    /// MIPS still available for new jobs.
    fn spare_capacity(&self) -> f64;
    /// Seconds from a user to this node.
    fn user_delay(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogDevice {
    pub id: NodeId,
    pub tier: u32,
    pub capacity: f64,
    pub service_rate: f64,
    pub energy_coeff: f64,
    pub assigned_rate: f64,
    pub spare_capacity: f64,
    /// Per-hop delays in seconds: user->FD1, FD1->FD2, ..., FD(t-1)->FDt.
    pub hop_delays: Vec<f64>,
    /// Sum of `hop_delays`.
    pub user_delay: f64,
}

impl Node for FogDevice {
    fn id(&self) -> NodeId {
        self.id
    }
    fn capacity(&self) -> f64 {
        self.capacity
    }
    fn service_rate(&self) -> f64 {
        self.service_rate
    }
    fn assigned_rate(&self) -> f64 {
        self.assigned_rate
    }
    fn energy_coeff(&self) -> f64 {
        self.energy_coeff
    }
    fn spare_capacity(&self) -> f64 {
        self.spare_capacity
    }
    fn user_delay(&self) -> f64 {
        self.user_delay
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudDc {
    pub id: NodeId,
    pub capacity: f64,
    pub service_rate: f64,
    pub energy_coeff: f64,
    pub assigned_rate: f64,
    pub user_delay: f64,
}

impl Node for CloudDc {
    fn id(&self) -> NodeId {
        self.id
    }
    fn capacity(&self) -> f64 {
        self.capacity
    }
    fn service_rate(&self) -> f64 {
        self.service_rate
    }
    fn assigned_rate(&self) -> f64 {
        self.assigned_rate
    }
    fn energy_coeff(&self) -> f64 {
        self.energy_coeff
    }
    // The cloud is never capacity-bound for feasibility.
    fn spare_capacity(&self) -> f64 {
        f64::INFINITY
    }
    fn user_delay(&self) -> f64 {
        self.user_delay
    }
}

/// A homogeneous set of fog devices at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogTier {
    pub level: u32,
    pub devices: Vec<FogDevice>,
}

impl FogTier {
    /// Capacity shared by every device of the tier.
    pub fn capacity(&self) -> f64 {
        self.devices.first().map_or(0.0, |d| d.capacity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub name: String,
    /// Fog tiers ordered by level, lowest first.
    pub tiers: Vec<FogTier>,
    pub cloud: CloudDc,
    pub rng_seed: u64,
}

/// Built-in topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Flat,
    TwoTier,
    ThreeTier,
    FourTier,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Flat,
        Preset::TwoTier,
        Preset::ThreeTier,
        Preset::FourTier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Flat => "flat",
            Preset::TwoTier => "two-tier",
            Preset::ThreeTier => "three-tier",
            Preset::FourTier => "four-tier",
        }
    }

    pub fn depth(self) -> usize {
        match self {
            Preset::Flat => 1,
            Preset::TwoTier => 2,
            Preset::ThreeTier => 3,
            Preset::FourTier => 4,
        }
    }

    pub fn config(self, seed: u64) -> ScenarioConfig {
        // (count, capacity MIPS, user delay range ms) per tier, lowest first.
        const TIERS: [(u32, f64, [f64; 2]); 4] = [
            (5, 2000.0, [1.0, 3.0]),
            (5, 3500.0, [4.1, 9.0]),
            (1, 6500.0, [10.2, 18.0]),
            (1, 8500.0, [19.3, 30.0]),
        ];
        ScenarioConfig {
            name: self.name().to_string(),
            seed,
            tiers: TIERS[..self.depth()]
                .iter()
                .map(|&(count, capacity_mips, range)| TierConfig {
                    count,
                    capacity_mips,
                    user_delay_ms_range: range,
                    service_rate: None,
                    energy_coeff: None,
                })
                .collect(),
            cloud: CloudConfig {
                capacity_mips: 57980.0,
                user_delay_ms: 140.0,
                service_rate: None,
                energy_coeff: None,
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat" => Ok(Preset::Flat),
            "two-tier" | "2-tier" => Ok(Preset::TwoTier),
            "three-tier" | "3-tier" => Ok(Preset::ThreeTier),
            "four-tier" | "4-tier" => Ok(Preset::FourTier),
            other => Err(format!(
                "unknown preset `{other}` (expected flat, two-tier, three-tier or four-tier)"
            )),
        }
    }
}

/// Declarative scenario description, the on-disk form of a hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub tiers: Vec<TierConfig>,
    pub cloud: CloudConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierConfig {
    pub count: u32,
    pub capacity_mips: f64,
    /// Inclusive `[low, high]` range of the user->device path delay.
    pub user_delay_ms_range: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_coeff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudConfig {
    pub capacity_mips: f64,
    pub user_delay_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_coeff: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("tier {tier} capacity {capacity} MIPS does not exceed the tier below ({below} MIPS)")]
    NonIncreasingTierCapacity {
        tier: u32,
        capacity: f64,
        below: f64,
    },
    #[error("tier {0} has no devices")]
    EmptyTier(u32),
    #[error("tier {tier}: invalid delay range: {reason}")]
    InvalidDelayRange { tier: u32, reason: String },
    #[error("invalid node parameter: {0}")]
    InvalidParameter(String),
    #[error("scenario has no fog tiers")]
    NoTiers,
}

pub fn build_hierarchy(preset: Preset, seed: u64) -> Hierarchy {
    build_from_config(&preset.config(seed)).expect("preset configs are valid")
}

/// Builds a hierarchy from any number of fog tiers.
///
/// Each tier's hop range is the difference between its user-delay range and
/// the one below it, so `user -> FD_t` is always the sum of `t` hops drawn
/// from those ranges.
pub fn build_from_config(cfg: &ScenarioConfig) -> Result<Hierarchy, BuildError> {
    if cfg.tiers.is_empty() {
        return Err(BuildError::NoTiers);
    }
    let hop_ranges = hop_ranges(cfg)?;

    let mut tiers = Vec::with_capacity(cfg.tiers.len());
    let mut below: Option<f64> = None;
    for (i, tc) in cfg.tiers.iter().enumerate() {
        let level = i as u32 + 1;
        if tc.count == 0 {
            return Err(BuildError::EmptyTier(level));
        }
        if !(tc.capacity_mips > 0.0) {
            return Err(BuildError::InvalidParameter(format!(
                "tier {level} capacity must be > 0"
            )));
        }
        if let Some(below) = below {
            if !(tc.capacity_mips > below) {
                return Err(BuildError::NonIncreasingTierCapacity {
                    tier: level,
                    capacity: tc.capacity_mips,
                    below,
                });
            }
        }
        below = Some(tc.capacity_mips);
        let service_rate = positive_or(tc.service_rate, tc.capacity_mips / DEFAULT_MEAN_LENGTH_MI, "service_rate")?;
        let energy_coeff = positive_or(tc.energy_coeff, tc.capacity_mips, "energy_coeff")?;

        let devices = (1..=tc.count)
            .map(|index| {
                let hop_delays = draw_hops(cfg.seed, level, index, &hop_ranges[..i + 1]);
                let user_delay = hop_delays.iter().sum();
                FogDevice {
                    id: NodeId::Fog { tier: level, index },
                    tier: level,
                    capacity: tc.capacity_mips,
                    service_rate,
                    energy_coeff,
                    assigned_rate: 0.0,
                    spare_capacity: tc.capacity_mips,
                    hop_delays,
                    user_delay,
                }
            })
            .collect();
        tiers.push(FogTier { level, devices });
    }

    let c = &cfg.cloud;
    if !(c.capacity_mips > 0.0) {
        return Err(BuildError::InvalidParameter("cloud capacity must be > 0".into()));
    }
    let top = below.unwrap_or(0.0);
    if !(c.capacity_mips > top) {
        return Err(BuildError::NonIncreasingTierCapacity {
            tier: cfg.tiers.len() as u32 + 1,
            capacity: c.capacity_mips,
            below: top,
        });
    }
    if !(c.user_delay_ms > 0.0) {
        return Err(BuildError::InvalidDelayRange {
            tier: cfg.tiers.len() as u32 + 1,
            reason: "cloud delay must be > 0".into(),
        });
    }
    let cloud = CloudDc {
        id: NodeId::Cloud,
        capacity: c.capacity_mips,
        service_rate: positive_or(c.service_rate, c.capacity_mips / DEFAULT_MEAN_LENGTH_MI, "service_rate")?,
        energy_coeff: positive_or(c.energy_coeff, c.capacity_mips, "energy_coeff")?,
        assigned_rate: 0.0,
        user_delay: c.user_delay_ms / 1000.0,
    };

    Ok(Hierarchy {
        name: cfg.name.clone(),
        tiers,
        cloud,
        rng_seed: cfg.seed,
    })
}

fn positive_or(value: Option<f64>, default: f64, what: &str) -> Result<f64, BuildError> {
    match value {
        None => Ok(default),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(BuildError::InvalidParameter(format!("{what} must be > 0, got {v}"))),
    }
}

/// Per-hop delay ranges in seconds, one per tier.
fn hop_ranges(cfg: &ScenarioConfig) -> Result<Vec<(f64, f64)>, BuildError> {
    let mut prev = (0.0, 0.0);
    let mut out = Vec::with_capacity(cfg.tiers.len());
    for (i, tc) in cfg.tiers.iter().enumerate() {
        let tier = i as u32 + 1;
        let [lo, hi] = tc.user_delay_ms_range;
        if !(lo > 0.0) || !(hi >= lo) {
            return Err(BuildError::InvalidDelayRange {
                tier,
                reason: format!("need 0 < low <= high, got [{lo}, {hi}] ms"),
            });
        }
        let hop = (lo - prev.0, hi - prev.1);
        if !(hop.0 > 0.0) || !(hop.1 >= hop.0) {
            return Err(BuildError::InvalidDelayRange {
                tier,
                reason: format!(
                    "range [{lo}, {hi}] ms is not reachable from the tier below [{}, {}] ms",
                    prev.0, prev.1
                ),
            });
        }
        out.push((hop.0 / 1000.0, hop.1 / 1000.0));
        prev = (lo, hi);
    }
    Ok(out)
}

fn device_stream(seed: u64, tier: u32, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tier as u64) << 32) | index as u64);
    rng
}

fn draw_hops(seed: u64, tier: u32, index: u32, ranges: &[(f64, f64)]) -> Vec<f64> {
    let mut rng = device_stream(seed, tier, index);
    ranges
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
        .collect()
}

impl Hierarchy {
    pub fn depth(&self) -> usize {
        self.tiers.len()
    }

    pub fn devices(&self) -> impl Iterator<Item = &FogDevice> {
        self.tiers.iter().flat_map(|t| t.devices.iter())
    }

    pub fn device(&self, id: NodeId) -> Option<&FogDevice> {
        match id {
            NodeId::Fog { tier, .. } => self
                .tiers
                .iter()
                .find(|t| t.level == tier)?
                .devices
                .iter()
                .find(|d| d.id == id),
            NodeId::Cloud => None,
        }
    }

    /// Fog device or cloud, as a cost-model node.
    pub fn node(&self, id: NodeId) -> Option<&dyn Node> {
        match id {
            NodeId::Cloud => Some(&self.cloud),
            fog => self.device(fog).map(|d| d as &dyn Node),
        }
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    pub fn user_delay(&self, id: NodeId) -> Option<f64> {
        self.node(id).map(|n| n.user_delay())
    }

    /// Sets every node's service rate to `capacity / mean job length`.
    pub fn calibrate(&mut self, jobs: &[JobSpec]) {
        if jobs.is_empty() {
            return;
        }
        let mean = jobs.iter().map(|j| j.length).sum::<f64>() / jobs.len() as f64;
        for d in self.tiers.iter_mut().flat_map(|t| t.devices.iter_mut()) {
            d.service_rate = d.capacity / mean;
        }
        self.cloud.service_rate = self.cloud.capacity / mean;
    }

    /// Adds `offset_s` to every fog device's user-path delay. The offset is
    /// applied to the first hop so path additivity is preserved; the cloud
    /// delay is untouched.
    pub fn with_delay_offset(mut self, offset_s: f64) -> Self {
        for d in self.tiers.iter_mut().flat_map(|t| t.devices.iter_mut()) {
            d.hop_delays[0] += offset_s;
            d.user_delay = d.hop_delays.iter().sum();
        }
        self
    }

    /// Adds `delta_mips` to the capacity of every fog device.
    pub fn with_capacity_increment(mut self, delta_mips: f64) -> Self {
        for d in self.tiers.iter_mut().flat_map(|t| t.devices.iter_mut()) {
            // acp follows capacity unless it was configured separately.
            if d.energy_coeff == d.capacity {
                d.energy_coeff += delta_mips;
            }
            d.capacity += delta_mips;
            d.spare_capacity += delta_mips;
        }
        self
    }

    /// Drops the highest-indexed device of `level`; an emptied tier is
    /// removed entirely. Missing tiers are ignored.
    pub fn without_last_device(mut self, level: u32) -> Self {
        if let Some(pos) = self.tiers.iter().position(|t| t.level == level) {
            self.tiers[pos].devices.pop();
            if self.tiers[pos].devices.is_empty() {
                self.tiers.remove(pos);
            }
        }
        self
    }

    pub fn without_tier(mut self, level: u32) -> Self {
        self.tiers.retain(|t| t.level != level);
        self
    }

    /// Lists every invariant breach; an empty list means the hierarchy is valid.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    NoTiers,
    EmptyTier,
    NonPositiveCapacity,
    NonPositiveServiceRate,
    NonPositiveEnergyCoeff,
    NegativeAssignedRate,
    NegativeSpareCapacity,
    IntraTierHeterogeneity,
    NonIncreasingTierCapacity,
    NonPositiveDelay,
    PathDelayMismatch,
    CloudDelayNotMaximal,
    DuplicateDevice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.detail)
    }
}

pub fn validate(h: &Hierarchy) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, detail: String| out.push(Violation { code, detail });

    if h.tiers.is_empty() {
        push(ViolationCode::NoTiers, "hierarchy has no fog tiers".into());
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut below: Option<(u32, f64)> = None;
    let mut max_fog_delay: f64 = 0.0;
    for tier in &h.tiers {
        if tier.devices.is_empty() {
            push(ViolationCode::EmptyTier, format!("tier {} has no devices", tier.level));
            continue;
        }
        let head = &tier.devices[0];
        for d in &tier.devices {
            if !seen.insert(d.id) || d.tier != tier.level {
                push(ViolationCode::DuplicateDevice, format!("{} misplaced or duplicated", d.id));
            }
            if !(d.capacity > 0.0) {
                push(ViolationCode::NonPositiveCapacity, format!("{} capacity {}", d.id, d.capacity));
            }
            if !(d.service_rate > 0.0) {
                push(ViolationCode::NonPositiveServiceRate, format!("{} service rate {}", d.id, d.service_rate));
            }
            if !(d.energy_coeff > 0.0) {
                push(ViolationCode::NonPositiveEnergyCoeff, format!("{} energy coefficient {}", d.id, d.energy_coeff));
            }
            if !(d.assigned_rate >= 0.0) {
                push(ViolationCode::NegativeAssignedRate, format!("{} assigned rate {}", d.id, d.assigned_rate));
            }
            if !(d.spare_capacity >= 0.0) {
                push(ViolationCode::NegativeSpareCapacity, format!("{} spare capacity {}", d.id, d.spare_capacity));
            }
            if d.capacity != head.capacity
                || d.service_rate != head.service_rate
                || d.energy_coeff != head.energy_coeff
            {
                push(
                    ViolationCode::IntraTierHeterogeneity,
                    format!("{} differs from {} within tier {}", d.id, head.id, tier.level),
                );
            }
            if d.hop_delays.is_empty() || d.hop_delays.iter().any(|&x| !(x > 0.0)) {
                push(ViolationCode::NonPositiveDelay, format!("{} has a non-positive hop delay", d.id));
            }
            let sum: f64 = d.hop_delays.iter().sum();
            if (sum - d.user_delay).abs() > REL_TOL * sum.abs().max(1e-12) {
                push(
                    ViolationCode::PathDelayMismatch,
                    format!("{} user delay {} != hop sum {}", d.id, d.user_delay, sum),
                );
            }
            max_fog_delay = max_fog_delay.max(d.user_delay);
        }
        if let Some((lvl, cap)) = below {
            if !(head.capacity > cap) {
                push(
                    ViolationCode::NonIncreasingTierCapacity,
                    format!("tier {} ({} MIPS) <= tier {} ({} MIPS)", tier.level, head.capacity, lvl, cap),
                );
            }
        }
        below = Some((tier.level, head.capacity));
    }

    let c = &h.cloud;
    if !(c.capacity > 0.0) {
        push(ViolationCode::NonPositiveCapacity, format!("cdc capacity {}", c.capacity));
    }
    if let Some((lvl, cap)) = below {
        if !(c.capacity > cap) {
            push(
                ViolationCode::NonIncreasingTierCapacity,
                format!("cdc ({} MIPS) <= tier {} ({} MIPS)", c.capacity, lvl, cap),
            );
        }
    }
    if !(c.service_rate > 0.0) {
        push(ViolationCode::NonPositiveServiceRate, format!("cdc service rate {}", c.service_rate));
    }
    if !(c.energy_coeff > 0.0) {
        push(ViolationCode::NonPositiveEnergyCoeff, format!("cdc energy coefficient {}", c.energy_coeff));
    }
    if !(c.assigned_rate >= 0.0) {
        push(ViolationCode::NegativeAssignedRate, format!("cdc assigned rate {}", c.assigned_rate));
    }
    if !(c.user_delay > 0.0) {
        push(ViolationCode::NonPositiveDelay, format!("cdc delay {}", c.user_delay));
    } else if !(c.user_delay > max_fog_delay) {
        push(
            ViolationCode::CloudDelayNotMaximal,
            format!("cdc delay {} s <= fog delay {} s", c.user_delay, max_fog_delay),
        );
    }
    out
}
