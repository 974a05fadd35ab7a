//! How fast nodes learn their own mobility patterns.
//!
//! The trace is split into a learning period followed by a routing period.
//! For k = 1..learning_days, a pattern is computed over the k days
//! immediately preceding the routing period (one day back, then two, and
//! so on) and compared against the routing-period pattern; the error is
//! the Euclidean distance scaled by the maximum pattern distance of the
//! space. Errors are averaged over all nodes with patterns in both
//! windows, and separately over the always-present pool.

use std::collections::HashMap;

use super::{par_map, EngineError};
use crate::mobyspace::{compute_pattern, prediction_error, MobyPoint, PatternWindow};
use crate::trace::{most_active_pool, Trace};
use crate::{NodeId, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct LearningPoint {
    /// Days devoted to learning.
    pub days: u32,
    pub mean_error_all: f64,
    pub mean_error_most_active: f64,
    pub nodes_all: u32,
    pub nodes_most_active: u32,
}

/// Measure pattern prediction error as a function of learning days.
pub fn learning_experiment(
    trace: &Trace,
    learning_days: u32,
    routing_days: u32,
) -> Result<Vec<LearningPoint>, EngineError> {
    if learning_days == 0 || routing_days == 0 {
        return Err(EngineError::InvalidSpec("learning and routing periods must be at least one day".into()));
    }
    let (t0, t1) = trace.span();
    let needed = u64::from(learning_days + routing_days) * SECONDS_PER_DAY;
    if t1 - t0 < needed {
        return Err(EngineError::InvalidSpec(format!(
            "trace span of {} s is shorter than the {} day learning + routing split",
            t1 - t0,
            learning_days + routing_days
        )));
    }
    let route_start = t0 + u64::from(learning_days) * SECONDS_PER_DAY;
    let route_end = route_start + u64::from(routing_days) * SECONDS_PER_DAY;
    let route_window = PatternWindow::new(route_start, route_end)?;

    let route_patterns: HashMap<NodeId, MobyPoint> = trace
        .nodes()
        .filter_map(|n| compute_pattern(trace, n, route_window).ok().map(|p| (n, p)))
        .collect();
    let active_pool: Vec<NodeId> = most_active_pool(trace);
    let n = trace.location_count();

    let points: Vec<Result<LearningPoint, EngineError>> = par_map((1..=learning_days).collect(), |k| {
        let learn_window = PatternWindow::new(route_start - u64::from(k) * SECONDS_PER_DAY, route_start)?;
        let mut sum_all = 0.0;
        let mut count_all = 0u32;
        let mut sum_active = 0.0;
        let mut count_active = 0u32;
        for node in trace.nodes() {
            let Some(route_pattern) = route_patterns.get(&node) else { continue };
            let Ok(learn_pattern) = compute_pattern(trace, node, learn_window) else { continue };
            let error = prediction_error(&learn_pattern, route_pattern, n)?;
            sum_all += error;
            count_all += 1;
            if active_pool.binary_search(&node).is_ok() {
                sum_active += error;
                count_active += 1;
            }
        }
        if count_all == 0 || count_active == 0 {
            return Err(EngineError::InvalidSpec(format!(
                "no nodes with patterns in both windows at k={k} days"
            )));
        }
        Ok(LearningPoint {
            days: k,
            mean_error_all: sum_all / f64::from(count_all),
            mean_error_most_active: sum_active / f64::from(count_active),
            nodes_all: count_all,
            nodes_most_active: count_active,
        })
    });
    points.into_iter().collect()
}
