//! Trace-driven simulator for routing in intermittently connected networks.
//!
//! Mobility is replayed from session traces (node/location attachment
//! intervals). Nodes that share a location can exchange bundles; five
//! forwarding policies compete on the same sampled population and workload.
//! One of them routes in a virtual Euclidean space whose axes are locations
//! and whose coordinates are per-location visit probabilities.
//!
//! Pipeline: [`trace`] ingests or synthesizes traces, [`contact`] turns a
//! node subset into a co-location oracle, [`mobyspace`] computes visit
//! patterns and distances, [`routing`] holds the per-contact decision rules,
//! [`engine`] drives simulations and multi-run experiments, and [`metrics`]
//! aggregates results with Student-t confidence intervals.

pub mod config;
pub mod contact;
pub mod engine;
pub mod metrics;
pub mod mobyspace;
pub mod rng;
pub mod routing;
pub mod trace;

/// Dense node identifier, `0..trace.node_count()`.
pub type NodeId = u32;
/// Dense location identifier, `0..trace.location_count()`.
pub type LocationId = u32;

/// Seconds in one day; day windows are fixed 86,400 s slices from the
/// trace epoch.
pub const SECONDS_PER_DAY: u64 = 86_400;
