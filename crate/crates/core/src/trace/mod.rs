//! Session-based mobility traces: ingestion, synthesis, statistics, and
//! user selection.
//!
//! The atomic record is a [`Session`]: one node attached to one location
//! over a half-open interval of seconds. A [`Trace`] owns the normalized
//! session list with dense node/location identifiers.

mod parse;
mod select;
mod stats;
mod synthetic;

pub use parse::{parse_sessions, write_sessions, ParseOutcome};
pub use select::{most_active_pool, select_users, traffic_sources, SelectionMode};
pub use stats::{trace_statistics, write_day_stats_csv, write_node_stats_csv, DayStats, NodeStats, TraceStats};
pub use synthetic::{generate_synthetic, SyntheticConfig};

use crate::{LocationId, NodeId};

/// One attachment interval: `node` was at `location` during `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Session {
    pub node: NodeId,
    pub location: LocationId,
    /// Seconds since trace epoch, inclusive.
    pub start: u64,
    /// Seconds since trace epoch, exclusive.
    pub end: u64,
}

impl Session {
    pub fn duration(&self) -> u64 {
        self.end - self.start
    }

    /// Seconds of this session falling inside `[t0, t1)`.
    pub fn overlap(&self, t0: u64, t1: u64) -> u64 {
        let lo = self.start.max(t0);
        let hi = self.end.min(t1);
        hi.saturating_sub(lo)
    }
}

/// A normalized mobility trace.
///
/// Sessions are sorted by start time; per node they are pairwise disjoint
/// (a node is attached to at most one location at any instant). Node and
/// location identifiers are dense in `[0, count)`.
#[derive(Debug, Clone)]
pub struct Trace {
    sessions: Vec<Session>,
    /// Session indices per node, ascending by start.
    per_node: Vec<Vec<u32>>,
    location_count: u32,
    span: (u64, u64),
}

impl Trace {
    /// Build a trace from already-dense, per-node-disjoint sessions; the
    /// span is the smallest interval covering every session.
    pub fn new(sessions: Vec<Session>, node_count: u32, location_count: u32) -> Self {
        let span = sessions
            .iter()
            .fold(None, |acc: Option<(u64, u64)>, s| match acc {
                None => Some((s.start, s.end)),
                Some((lo, hi)) => Some((lo.min(s.start), hi.max(s.end))),
            })
            .unwrap_or((0, 0));
        Trace::with_span(sessions, node_count, location_count, span)
    }

    /// Build a trace with an explicit observation window (synthetic traces
    /// declare their configured duration as the span even when no session
    /// touches the boundaries).
    pub fn with_span(
        mut sessions: Vec<Session>,
        node_count: u32,
        location_count: u32,
        span: (u64, u64),
    ) -> Self {
        sessions.sort_unstable_by_key(|s| (s.start, s.node, s.location, s.end));
        let mut per_node = vec![Vec::new(); node_count as usize];
        for (i, s) in sessions.iter().enumerate() {
            debug_assert!(s.start < s.end, "empty session");
            debug_assert!(s.node < node_count && s.location < location_count);
            debug_assert!(s.start >= span.0 && s.end <= span.1, "session outside span");
            per_node[s.node as usize].push(i as u32);
        }
        Trace { sessions, per_node, location_count, span }
    }

    /// All sessions, sorted by start time.
    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn node_count(&self) -> u32 {
        self.per_node.len() as u32
    }

    pub fn location_count(&self) -> u32 {
        self.location_count
    }

    /// Trace span `[t_begin, t_end)` covering every session.
    pub fn span(&self) -> (u64, u64) {
        self.span
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.node_count()
    }

    /// Sessions of one node, ascending by start.
    pub fn node_sessions(&self, node: NodeId) -> impl Iterator<Item = &Session> {
        self.per_node[node as usize].iter().map(|&i| &self.sessions[i as usize])
    }

    /// First day index and last day index intersecting the span.
    pub fn day_range(&self) -> (u32, u32) {
        let (t0, t1) = self.span;
        if t1 == 0 {
            return (0, 0);
        }
        let lo = (t0 / crate::SECONDS_PER_DAY) as u32;
        let hi = ((t1 - 1) / crate::SECONDS_PER_DAY) as u32;
        (lo, hi)
    }
}

/// Errors from trace ingestion, synthesis, and selection.
#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("input contains no usable sessions")]
    Empty,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("selection pool has {available} candidates, {requested} requested")]
    PoolTooSmall { requested: usize, available: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
