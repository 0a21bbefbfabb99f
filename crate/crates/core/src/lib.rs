//! Deterministic simulation of job scheduling on hierarchical fog-cloud
//! topologies.
//!
//! The pipeline is: load a workload ([`workload`]), build a topology
//! ([`model`]), schedule the jobs ([`schedulers`]), execute the schedule
//! ([`engine`]) and price it ([`costmodel`]). [`experiments`] sweeps that
//! pipeline over job load, link delay, device count and device speed.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod costmodel;
pub mod engine;
pub mod experiments;
pub mod model;
pub mod schedulers;
pub mod workload;

pub use costmodel::CostBreakdown;
pub use engine::{run, RunMetrics};
pub use model::{build_hierarchy, Hierarchy, JobId, JobSpec, NodeId, Preset, Tier};
pub use schedulers::{Algorithm, Schedule};
