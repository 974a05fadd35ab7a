//! User selection for experiments: uniform samples, the always-present
//! pool, entropy-binned pools, and traffic-source election.

use super::{Trace, TraceError};
use crate::mobyspace::{compute_pattern, relative_entropy, PatternWindow};
use crate::{NodeId, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionMode {
    /// Uniform over all trace nodes.
    UniformRandom,
    /// Uniform over nodes active on every day of the span.
    MostActive,
    /// Uniform over nodes whose full-span pattern entropy lies in `[lo, hi)`.
    EntropyBin { lo: f64, hi: f64 },
}

/// Draw `count` distinct nodes from the mode's pool. Pure in
/// `(trace, mode, count, seed)`; the result is sorted ascending.
pub fn select_users(
    trace: &Trace,
    mode: SelectionMode,
    count: usize,
    seed: u64,
) -> Result<Vec<NodeId>, TraceError> {
    let pool = match mode {
        SelectionMode::UniformRandom => trace.nodes().collect(),
        SelectionMode::MostActive => most_active_pool(trace),
        SelectionMode::EntropyBin { lo, hi } => entropy_pool(trace, lo, hi)?,
    };
    sample_pool(&pool, count, seed, "sampling")
}

/// Elect traffic sources among the sampled users: eligible nodes have at
/// least one session starting in the first seven days of the span.
pub fn traffic_sources(
    trace: &Trace,
    sampled: &[NodeId],
    count: usize,
    seed: u64,
) -> Result<Vec<NodeId>, TraceError> {
    let (t0, t1) = trace.span();
    let first_week_end = (t0 + 7 * SECONDS_PER_DAY).min(t1);
    let eligible: Vec<NodeId> = sampled
        .iter()
        .copied()
        .filter(|&n| trace.node_sessions(n).any(|s| s.start >= t0 && s.start < first_week_end))
        .collect();
    sample_pool(&eligible, count, seed, "sources")
}

fn sample_pool(pool: &[NodeId], count: usize, seed: u64, label: &str) -> Result<Vec<NodeId>, TraceError> {
    if pool.len() < count {
        return Err(TraceError::PoolTooSmall { requested: count, available: pool.len() });
    }
    let mut rng = crate::rng::stream(seed, 0, label);
    let mut picked: Vec<NodeId> = rand::seq::index::sample(&mut rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Nodes with at least one second of session time in every day window of
/// the span.
pub fn most_active_pool(trace: &Trace) -> Vec<NodeId> {
    let (day_lo, day_hi) = trace.day_range();
    let n_days = (day_hi - day_lo + 1) as usize;
    let mut pool = Vec::new();
    'nodes: for node in trace.nodes() {
        let mut covered = vec![false; n_days];
        let mut remaining = n_days;
        for s in trace.node_sessions(node) {
            let first = (s.start / SECONDS_PER_DAY) as u32;
            let last = ((s.end - 1) / SECONDS_PER_DAY) as u32;
            for day in first..=last {
                let slot = (day - day_lo) as usize;
                if !covered[slot] {
                    covered[slot] = true;
                    remaining -= 1;
                    if remaining == 0 {
                        pool.push(node);
                        continue 'nodes;
                    }
                }
            }
        }
    }
    pool
}

fn entropy_pool(trace: &Trace, lo: f64, hi: f64) -> Result<Vec<NodeId>, TraceError> {
    if trace.location_count() < 2 {
        return Err(TraceError::InvalidConfig(
            "entropy-bin selection needs at least 2 locations".into(),
        ));
    }
    let (t0, t1) = trace.span();
    let window = PatternWindow::new(t0, t1).map_err(|e| TraceError::InvalidConfig(e.to_string()))?;
    let mut pool = Vec::new();
    for node in trace.nodes() {
        let Ok(pattern) = compute_pattern(trace, node, window) else { continue };
        let entropy = relative_entropy(&pattern)
            .map_err(|e| TraceError::InvalidConfig(e.to_string()))?;
        if entropy >= lo && entropy < hi {
            pool.push(node);
        }
    }
    Ok(pool)
}
