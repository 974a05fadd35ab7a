//! Descriptive statistics over a trace: per-node and per-day aggregates.
//!
//! A "day" is a fixed 86,400 s window counted from the trace epoch. A node
//! is active on a day if it accumulates at least one second of session time
//! inside that window.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use super::Trace;
use crate::{NodeId, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub node: NodeId,
    pub active_days: u32,
    pub locations_visited: u32,
    /// Total attached seconds over the whole trace.
    pub connection_time: u64,
    /// First day with activity.
    pub apparition_day: u32,
    /// Last day with activity.
    pub disparition_day: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayStats {
    pub day: u32,
    pub active_nodes: u32,
    /// Mean locations visited per active node.
    pub mean_locations: f64,
    /// Mean attached seconds per active node.
    pub mean_connection_time: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TraceStats {
    /// One entry per node that has at least one session.
    pub per_node: Vec<NodeStats>,
    /// One entry per day window intersecting the trace span.
    pub per_day: Vec<DayStats>,
}

/// Compute per-node and per-day aggregates.
pub fn trace_statistics(trace: &Trace) -> TraceStats {
    if trace.sessions().is_empty() {
        return TraceStats::default();
    }

    // (day, node) -> (seconds, locations that day)
    let mut day_node: BTreeMap<(u32, NodeId), (u64, BTreeSet<u32>)> = BTreeMap::new();
    for s in trace.sessions() {
        let first_day = (s.start / SECONDS_PER_DAY) as u32;
        let last_day = ((s.end - 1) / SECONDS_PER_DAY) as u32;
        for day in first_day..=last_day {
            let t0 = u64::from(day) * SECONDS_PER_DAY;
            let secs = s.overlap(t0, t0 + SECONDS_PER_DAY);
            if secs == 0 {
                continue;
            }
            let entry = day_node.entry((day, s.node)).or_default();
            entry.0 += secs;
            entry.1.insert(s.location);
        }
    }

    let mut per_node = Vec::new();
    for node in trace.nodes() {
        let mut sessions = trace.node_sessions(node).peekable();
        if sessions.peek().is_none() {
            continue;
        }
        let mut locations = BTreeSet::new();
        let mut connection_time = 0u64;
        for s in sessions {
            locations.insert(s.location);
            connection_time += s.duration();
        }
        let mut active_days = BTreeSet::new();
        for s in trace.node_sessions(node) {
            let first_day = (s.start / SECONDS_PER_DAY) as u32;
            let last_day = ((s.end - 1) / SECONDS_PER_DAY) as u32;
            for day in first_day..=last_day {
                let t0 = u64::from(day) * SECONDS_PER_DAY;
                if s.overlap(t0, t0 + SECONDS_PER_DAY) > 0 {
                    active_days.insert(day);
                }
            }
        }
        per_node.push(NodeStats {
            node,
            active_days: active_days.len() as u32,
            locations_visited: locations.len() as u32,
            connection_time,
            apparition_day: *active_days.first().unwrap(),
            disparition_day: *active_days.last().unwrap(),
        });
    }

    let (day_lo, day_hi) = trace.day_range();
    let mut per_day = Vec::new();
    for day in day_lo..=day_hi {
        let entries: Vec<_> = day_node.range((day, 0)..=(day, NodeId::MAX)).collect();
        let active = entries.len() as u32;
        let (mean_locations, mean_connection_time) = if active > 0 {
            let locs: usize = entries.iter().map(|(_, (_, l))| l.len()).sum();
            let secs: u64 = entries.iter().map(|(_, (s, _))| *s).sum();
            (locs as f64 / active as f64, secs as f64 / active as f64)
        } else {
            (0.0, 0.0)
        };
        per_day.push(DayStats { day, active_nodes: active, mean_locations, mean_connection_time });
    }

    TraceStats { per_node, per_day }
}

/// One row per node: `node,active_days,locations_visited,connection_time_s,apparition_day,disparition_day`.
pub fn write_node_stats_csv(stats: &TraceStats, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "node,active_days,locations_visited,connection_time_s,apparition_day,disparition_day")?;
    for n in &stats.per_node {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            n.node, n.active_days, n.locations_visited, n.connection_time, n.apparition_day, n.disparition_day
        )?;
    }
    Ok(())
}

/// One row per day: `day,active_nodes,mean_locations,mean_connection_time_s`.
pub fn write_day_stats_csv(stats: &TraceStats, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "day,active_nodes,mean_locations,mean_connection_time_s")?;
    for d in &stats.per_day {
        writeln!(
            w,
            "{},{},{:.6},{:.6}",
            d.day, d.active_nodes, d.mean_locations, d.mean_connection_time
        )?;
    }
    Ok(())
}
