//! Co-location oracle over a node subset: who shares a location with whom
//! at time `t`, and when contact sets change.
//!
//! Presence intervals are half-open `[start, end)`: a node departing at
//! `t` is not present at `t`. Back-to-back sessions of one node at the
//! same location are coalesced into a single visit, so a visit is one
//! uninterrupted stay.

use std::collections::{BTreeMap, HashMap};

use crate::trace::Trace;
use crate::{LocationId, NodeId};

/// One uninterrupted stay of a node at a location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub location: LocationId,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, Copy)]
struct Presence {
    node: NodeId,
    start: u64,
    end: u64,
}

/// Occupancy change at one location: `arrivals` begin their visit at
/// `time`, `departures` end theirs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactEvent {
    pub time: u64,
    pub location: LocationId,
    pub arrivals: Vec<NodeId>,
    pub departures: Vec<NodeId>,
}

#[derive(Debug, thiserror::Error)]
pub enum ContactError {
    #[error("subset is empty")]
    EmptySubset,
    #[error("time step must be at least 1 second")]
    ZeroTimeStep,
    #[error("node {0} is not part of the index subset")]
    UnknownNode(NodeId),
}

/// Immutable co-location index for one node subset.
#[derive(Debug, Clone)]
pub struct OccupancyIndex {
    subset: Vec<NodeId>,
    time_step: u64,
    span: (u64, u64),
    by_location: Vec<Vec<Presence>>,
    by_node: HashMap<NodeId, Vec<Visit>>,
    change_times: Vec<u64>,
}

/// Build the index for `subset`; sessions of other nodes are ignored.
pub fn build_index(trace: &Trace, subset: &[NodeId], time_step: u64) -> Result<OccupancyIndex, ContactError> {
    if subset.is_empty() {
        return Err(ContactError::EmptySubset);
    }
    if time_step == 0 {
        return Err(ContactError::ZeroTimeStep);
    }
    let mut sorted_subset = subset.to_vec();
    sorted_subset.sort_unstable();
    sorted_subset.dedup();
    if let Some(&bad) = sorted_subset.iter().find(|&&n| n >= trace.node_count()) {
        return Err(ContactError::UnknownNode(bad));
    }

    let mut by_location: Vec<Vec<Presence>> = vec![Vec::new(); trace.location_count() as usize];
    let mut by_node = HashMap::with_capacity(sorted_subset.len());
    let mut change_times = Vec::new();

    for &node in &sorted_subset {
        let mut visits: Vec<Visit> = Vec::new();
        for s in trace.node_sessions(node) {
            match visits.last_mut() {
                Some(v) if v.location == s.location && v.end == s.start => v.end = s.end,
                _ => visits.push(Visit { location: s.location, start: s.start, end: s.end }),
            }
        }
        for v in &visits {
            by_location[v.location as usize].push(Presence { node, start: v.start, end: v.end });
            change_times.push(v.start);
            change_times.push(v.end);
        }
        by_node.insert(node, visits);
    }

    for intervals in &mut by_location {
        intervals.sort_unstable_by_key(|p| (p.start, p.node));
    }
    change_times.sort_unstable();
    change_times.dedup();

    Ok(OccupancyIndex {
        subset: sorted_subset,
        time_step,
        span: trace.span(),
        by_location,
        by_node,
        change_times,
    })
}

impl OccupancyIndex {
    pub fn subset(&self) -> &[NodeId] {
        &self.subset
    }

    pub fn time_step(&self) -> u64 {
        self.time_step
    }

    pub fn span(&self) -> (u64, u64) {
        self.span
    }

    /// Number of locations in the underlying trace.
    pub fn location_count(&self) -> usize {
        self.by_location.len()
    }

    /// Every instant at which some visit starts or ends, ascending.
    pub fn change_times(&self) -> &[u64] {
        &self.change_times
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.subset.binary_search(&node).is_ok()
    }

    /// The node's location and visit ordinal at `t`, or `None` when it is
    /// not attached anywhere.
    pub fn location_of(&self, node: NodeId, t: u64) -> Option<(LocationId, u32)> {
        let visits = self.by_node.get(&node)?;
        let idx = visits.partition_point(|v| v.start <= t);
        if idx == 0 {
            return None;
        }
        let v = visits[idx - 1];
        (t < v.end).then_some((v.location, (idx - 1) as u32))
    }

    pub fn visits(&self, node: NodeId) -> &[Visit] {
        self.by_node.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Subset nodes present at `location` at time `t`, ascending.
    pub fn occupants(&self, location: LocationId, t: u64) -> Vec<NodeId> {
        let mut present: Vec<NodeId> = self.by_location[location as usize]
            .iter()
            .take_while(|p| p.start <= t)
            .filter(|p| t < p.end)
            .map(|p| p.node)
            .collect();
        present.sort_unstable();
        present
    }

    /// Subset nodes sharing `node`'s current location at `t`, excluding
    /// the node itself. Empty when the node is unattached.
    pub fn neighbors(&self, node: NodeId, t: u64) -> Result<Vec<NodeId>, ContactError> {
        if !self.contains(node) {
            return Err(ContactError::UnknownNode(node));
        }
        match self.location_of(node, t) {
            None => Ok(Vec::new()),
            Some((location, _)) => {
                let mut present = self.occupants(location, t);
                present.retain(|&n| n != node);
                Ok(present)
            }
        }
    }

    /// The occupancy change stream, ordered by time then location.
    /// Replaying arrivals and departures reconstructs exactly the
    /// occupancy answered by interval queries.
    pub fn contact_events(&self) -> Vec<ContactEvent> {
        let mut grouped: BTreeMap<(u64, LocationId), (Vec<NodeId>, Vec<NodeId>)> = BTreeMap::new();
        for (loc, intervals) in self.by_location.iter().enumerate() {
            let location = loc as LocationId;
            for p in intervals {
                grouped.entry((p.start, location)).or_default().0.push(p.node);
                grouped.entry((p.end, location)).or_default().1.push(p.node);
            }
        }
        grouped
            .into_iter()
            .map(|((time, location), (mut arrivals, mut departures))| {
                arrivals.sort_unstable();
                departures.sort_unstable();
                ContactEvent { time, location, arrivals, departures }
            })
            .collect()
    }
}
