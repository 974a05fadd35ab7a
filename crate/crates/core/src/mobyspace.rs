//! The virtual routing space: visit-probability patterns, Euclidean
//! distance between them, normalized entropy, component truncation, and
//! learning-error measurement.
//!
//! A node's pattern is the fraction of its connected time spent at each
//! location over a window; the coordinates of every full pattern sum to 1,
//! so all points live on a hyperplane of the `n`-dimensional space, one
//! axis per location.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::trace::Trace;
use crate::{LocationId, NodeId};

/// Coordinate-sum slack accepted for full (non-truncated) patterns.
pub const NORMALIZATION_EPS: f64 = 1e-9;

/// A point in the visit-probability space, stored sparsely.
///
/// `truncated` marks points reduced to their principal components; their
/// coordinates sum to at most 1 and are deliberately not renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct MobyPoint {
    coords: Vec<(LocationId, f64)>,
    dim: u32,
    truncated: bool,
}

impl MobyPoint {
    /// Build a full pattern from sparse coordinates over a space of
    /// dimension `dim`. Zero coordinates may be omitted.
    pub fn from_coords(dim: u32, mut coords: Vec<(LocationId, f64)>) -> Result<Self, PatternError> {
        coords.retain(|&(_, v)| v != 0.0);
        coords.sort_unstable_by_key(|&(l, _)| l);
        let mut sum = 0.0;
        let mut prev: Option<LocationId> = None;
        for &(l, v) in &coords {
            if l >= dim {
                return Err(PatternError::InvalidCoords(format!("location {l} outside dimension {dim}")));
            }
            if prev == Some(l) {
                return Err(PatternError::InvalidCoords(format!("duplicate location {l}")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(PatternError::InvalidCoords(format!("coordinate {v} outside [0,1]")));
            }
            prev = Some(l);
            sum += v;
        }
        if (sum - 1.0).abs() > NORMALIZATION_EPS {
            return Err(PatternError::InvalidCoords(format!("coordinates sum to {sum}, expected 1")));
        }
        Ok(MobyPoint { coords, dim, truncated: false })
    }

    /// Space dimension `n` (the trace's location count).
    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Non-zero coordinates, ascending by location.
    pub fn coords(&self) -> &[(LocationId, f64)] {
        &self.coords
    }

    pub fn get(&self, location: LocationId) -> f64 {
        self.coords
            .binary_search_by_key(&location, |&(l, _)| l)
            .map(|i| self.coords[i].1)
            .unwrap_or(0.0)
    }

    pub fn coordinate_sum(&self) -> f64 {
        self.coords.iter().map(|&(_, v)| v).sum()
    }
}

/// Half-open time window `[t0, t1)` over which a pattern is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternWindow {
    t0: u64,
    t1: u64,
}

impl PatternWindow {
    pub fn new(t0: u64, t1: u64) -> Result<Self, PatternError> {
        if t0 >= t1 {
            return Err(PatternError::InvalidWindow { t0, t1 });
        }
        Ok(PatternWindow { t0, t1 })
    }

    pub fn full_span(trace: &Trace) -> Result<Self, PatternError> {
        let (t0, t1) = trace.span();
        PatternWindow::new(t0, t1)
    }

    pub fn bounds(&self) -> (u64, u64) {
        (self.t0, self.t1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PatternError {
    #[error("node {0} has no session time inside the pattern window")]
    NoConnectionTime(NodeId),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("relative entropy needs a space dimension of at least 2")]
    EntropyUndefined,
    #[error("relative entropy is undefined for truncated points")]
    TruncatedPoint,
    #[error("invalid pattern window [{t0}, {t1})")]
    InvalidWindow { t0: u64, t1: u64 },
    #[error("invalid coordinates: {0}")]
    InvalidCoords(String),
}

/// Compute a node's visit pattern over a window: the coordinate for
/// location `i` is the node's session time at `i` inside the window,
/// divided by its total session time inside the window.
pub fn compute_pattern(trace: &Trace, node: NodeId, window: PatternWindow) -> Result<MobyPoint, PatternError> {
    let (t0, t1) = window.bounds();
    let mut per_location: BTreeMap<LocationId, u64> = BTreeMap::new();
    let mut total = 0u64;
    for s in trace.node_sessions(node) {
        let secs = s.overlap(t0, t1);
        if secs > 0 {
            *per_location.entry(s.location).or_insert(0) += secs;
            total += secs;
        }
    }
    if total == 0 {
        return Err(PatternError::NoConnectionTime(node));
    }
    let coords = per_location
        .into_iter()
        .map(|(l, secs)| (l, secs as f64 / total as f64))
        .collect();
    Ok(MobyPoint { coords, dim: trace.location_count(), truncated: false })
}

/// Euclidean distance between two points of the same space.
pub fn distance(a: &MobyPoint, b: &MobyPoint) -> Result<f64, PatternError> {
    if a.dim != b.dim {
        return Err(PatternError::DimensionMismatch(a.dim, b.dim));
    }
    let mut sum = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.coords.len() || j < b.coords.len() {
        let la = a.coords.get(i).map(|&(l, _)| l);
        let lb = b.coords.get(j).map(|&(l, _)| l);
        let d = match (la, lb) {
            (Some(la), Some(lb)) if la == lb => {
                let d = a.coords[i].1 - b.coords[j].1;
                i += 1;
                j += 1;
                d
            }
            (Some(la), Some(lb)) if la < lb => {
                let d = a.coords[i].1;
                i += 1;
                d
            }
            (Some(_), Some(_)) | (None, Some(_)) => {
                let d = -b.coords[j].1;
                j += 1;
                d
            }
            (Some(_), None) => {
                let d = a.coords[i].1;
                i += 1;
                d
            }
            (None, None) => unreachable!(),
        };
        sum += d * d;
    }
    Ok(sum.sqrt())
}

/// Normalized Shannon entropy of a full pattern, in `[0, 1]`:
/// `-(sum p_i ln p_i) / ln n` with `0 ln 0 = 0` and `n` the space dimension.
pub fn relative_entropy(p: &MobyPoint) -> Result<f64, PatternError> {
    if p.truncated {
        return Err(PatternError::TruncatedPoint);
    }
    if p.dim < 2 {
        return Err(PatternError::EntropyUndefined);
    }
    let raw: f64 = p.coords.iter().map(|&(_, v)| if v > 0.0 { -v * v.ln() } else { 0.0 }).sum();
    let normalized = raw / (f64::from(p.dim)).ln();
    // float noise can land an epsilon outside the closed interval
    Ok(normalized.clamp(0.0, 1.0))
}

/// Keep the `l` largest coordinates, zero the rest, and flag the point as
/// truncated without renormalizing. Ties keep the lower location id.
/// `l >= dim` returns the point unchanged and unflagged.
pub fn truncate(p: &MobyPoint, l: u32) -> MobyPoint {
    if l >= p.dim {
        return p.clone();
    }
    let mut ranked: Vec<(LocationId, f64)> = p.coords.clone();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked.truncate(l as usize);
    ranked.sort_unstable_by_key(|&(loc, _)| loc);
    MobyPoint { coords: ranked, dim: p.dim, truncated: true }
}

/// Learning error between a learned pattern and the pattern that actually
/// characterizes the routing period: Euclidean distance divided by the
/// square root of the space dimension.
pub fn prediction_error(p_learn: &MobyPoint, p_route: &MobyPoint, n: u32) -> Result<f64, PatternError> {
    if p_learn.dim != p_route.dim || p_learn.dim != n {
        return Err(PatternError::DimensionMismatch(p_learn.dim, n));
    }
    Ok(distance(p_learn, p_route)? / f64::from(n).sqrt())
}

/// Patterns for a node set, one window, optional truncation. Nodes without
/// session time in the window are absent.
#[derive(Debug, Clone)]
pub struct PatternTable {
    dim: u32,
    map: HashMap<NodeId, MobyPoint>,
}

impl PatternTable {
    pub fn compute(trace: &Trace, nodes: &[NodeId], window: PatternWindow, truncation: Option<u32>) -> Self {
        let mut map = HashMap::with_capacity(nodes.len());
        for &node in nodes {
            if let Ok(pattern) = compute_pattern(trace, node, window) {
                let pattern = match truncation {
                    Some(l) => truncate(&pattern, l),
                    None => pattern,
                };
                map.insert(node, pattern);
            }
        }
        PatternTable { dim: trace.location_count(), map }
    }

    pub fn get(&self, node: NodeId) -> Option<&MobyPoint> {
        self.map.get(&node)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Sparse CSV rows `node_id,location_id,probability`, sorted.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "node_id,location_id,probability")?;
        let mut nodes: Vec<_> = self.map.keys().copied().collect();
        nodes.sort_unstable();
        for node in nodes {
            for &(loc, prob) in self.map[&node].coords() {
                writeln!(w, "{node},{loc},{prob:.9}")?;
            }
        }
        Ok(())
    }
}
