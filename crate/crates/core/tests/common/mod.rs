//! Shared test helpers: a brute-force fixed-step reference simulator and
//! small trace/workload builders.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use mobysim_core::contact::build_index;
use mobysim_core::engine::{Bundle, BundleOutcome, RunResult, SimParams};
use mobysim_core::mobyspace::{PatternTable, PatternWindow};
use mobysim_core::routing::{decide, Decision, Policy, PolicyContext, PreferenceTable};
use mobysim_core::trace::{generate_synthetic, SyntheticConfig, Trace};
use mobysim_core::NodeId;

pub const NO_VISIT: u32 = u32::MAX;

/// Counts of non-delivery forwards per (bundle, node, visit), for the
/// hot-potato per-visit bound.
pub type HandlingLog = HashMap<(usize, NodeId, u32), u32>;

/// Step the clock one `time_step` at a time and let every active copy
/// decide each step, querying co-location straight from the interval
/// index. Slow and obviously correct.
pub fn reference_simulate(
    trace: &Trace,
    subset: &[NodeId],
    bundles: &[Bundle],
    policy: Policy,
    params: &SimParams,
    seed: u64,
) -> (RunResult, HandlingLog) {
    let index = build_index(trace, subset, params.time_step).unwrap();
    let (start, _) = trace.span();
    let horizon = match params.duration {
        Some(d) => start + d,
        None => trace.span().1,
    };
    let window = match params.pattern_window {
        Some((a, b)) => PatternWindow::new(a, b).unwrap(),
        None => PatternWindow::full_span(trace).unwrap(),
    };
    let patterns = policy
        .needs_patterns()
        .then(|| PatternTable::compute(trace, subset, window, params.truncation));
    let preferences = policy.needs_preferences().then(|| {
        PreferenceTable::generate(subset, bundles.iter().map(|b| b.destination), seed)
    });
    let mut rng = mobysim_core::rng::stream(seed, 0, "potato");

    let n = bundles.len();
    let mut custodian: Vec<NodeId> = bundles.iter().map(|b| b.source).collect();
    let mut paths: Vec<Vec<NodeId>> = bundles.iter().map(|b| vec![b.source]).collect();
    let mut delivered_at: Vec<Option<u64>> = vec![None; n];
    let mut delivered_hops: Vec<Option<u32>> = vec![None; n];
    let mut delivered_path: Vec<Option<Vec<NodeId>>> = vec![None; n];
    let mut frozen = vec![false; n];
    // single copy: when the custodian may act again
    let mut actionable: Vec<u64> = bundles.iter().map(|b| b.created_at).collect();
    // epidemic copies: (bundle, holder) -> actionable-from
    let mut copies: Vec<HashMap<NodeId, u64>> = vec![HashMap::new(); n];
    let mut copy_paths: Vec<HashMap<NodeId, Vec<NodeId>>> = vec![HashMap::new(); n];
    let mut holders: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    let mut handled: Vec<HashMap<NodeId, u32>> = vec![HashMap::new(); n];
    let mut handling_log: HandlingLog = HashMap::new();
    let mut transmissions = 0u64;
    let mut blind = 0u64;

    if policy == Policy::Epidemic {
        for (i, b) in bundles.iter().enumerate() {
            copies[i].insert(b.source, b.created_at);
            copy_paths[i].insert(b.source, vec![b.source]);
            holders[i].insert(b.source);
        }
    }

    let mut t = start;
    while t < horizon {
        // copies allowed to act this step, ascending (holder, bundle)
        let mut snapshot: Vec<(NodeId, usize)> = Vec::new();
        for (i, _) in bundles.iter().enumerate() {
            if delivered_at[i].is_some() || frozen[i] {
                continue;
            }
            if policy == Policy::Epidemic {
                for (&holder, &from) in &copies[i] {
                    if from <= t {
                        snapshot.push((holder, i));
                    }
                }
            } else if actionable[i] <= t {
                snapshot.push((custodian[i], i));
            }
        }
        snapshot.sort_unstable();

        for (node, i) in snapshot {
            if delivered_at[i].is_some() || frozen[i] {
                continue;
            }
            if policy.is_single_copy() && custodian[i] != node {
                continue;
            }
            let neighbors = index.neighbors(node, t).unwrap();
            let visit = index.location_of(node, t).map(|(_, v)| v).unwrap_or(NO_VISIT);
            let destination = bundles[i].destination;
            let verdict = {
                let ctx = PolicyContext {
                    custodian: node,
                    bundle: bundles[i].id,
                    destination,
                    neighbors: &neighbors,
                    patterns: patterns.as_ref(),
                    preferences: preferences.as_ref(),
                    visit_epoch: visit,
                    handled_this_visit: handled[i].get(&node) == Some(&visit),
                    copy_holders: (policy == Policy::Epidemic).then_some(&holders[i]),
                };
                decide(policy, &ctx, &mut rng)
            };
            if verdict.blind {
                blind += 1;
            }
            match verdict.decision {
                Decision::Keep => {}
                Decision::Forward(target) => {
                    assert!(
                        neighbors.binary_search(&target).is_ok(),
                        "forward to a non-neighbor"
                    );
                    transmissions += 1;
                    if policy == Policy::Potato && target != destination {
                        handled[i].insert(node, visit);
                        *handling_log.entry((i, node, visit)).or_insert(0) += 1;
                    }
                    custodian[i] = target;
                    paths[i].push(target);
                    if target == destination {
                        delivered_at[i] = Some(t);
                        delivered_hops[i] = Some((paths[i].len() - 1) as u32);
                    } else {
                        actionable[i] = t + params.time_step;
                    }
                }
                Decision::Replicate(targets) => {
                    let parent = copy_paths[i][&node].clone();
                    for target in targets {
                        transmissions += 1;
                        holders[i].insert(target);
                        let mut path = parent.clone();
                        path.push(target);
                        if target == destination {
                            delivered_at[i] = Some(t);
                            delivered_hops[i] = Some((path.len() - 1) as u32);
                            delivered_path[i] = Some(path.clone());
                            frozen[i] = true;
                        } else {
                            copies[i].insert(target, t + params.time_step);
                        }
                        copy_paths[i].insert(target, path);
                    }
                }
            }
        }
        t += params.time_step;
    }

    let outcomes = bundles
        .iter()
        .enumerate()
        .map(|(i, b)| BundleOutcome {
            bundle: b.id,
            source: b.source,
            destination: b.destination,
            created_at: b.created_at,
            delivered_at: delivered_at[i],
            hops: delivered_hops[i],
            path: match policy {
                Policy::Epidemic => delivered_path[i].clone().unwrap_or_else(|| vec![b.source]),
                _ => paths[i].clone(),
            },
        })
        .collect();
    (
        RunResult { policy, outcomes, transmissions, blind_decisions: blind },
        handling_log,
    )
}

/// A small trace with frequent short sessions: lots of contact churn.
pub fn dense_trace(seed: u64, hours: u64) -> Trace {
    generate_synthetic(&SyntheticConfig {
        node_count: 10,
        location_count: 3,
        duration: hours * 3600,
        sessions_per_day: 60.0,
        mean_session_duration: 900.0,
        zipf_exponent: 1.2,
        seed,
        ..Default::default()
    })
    .unwrap()
}

/// Hand workload: up to `count` bundles from distinct sources that appear
/// before the horizon, destinations spread over other nodes.
pub fn test_bundles(trace: &Trace, horizon: u64, count: usize) -> Vec<Bundle> {
    let mut bundles = Vec::new();
    let mut id = 0u32;
    for source in trace.nodes() {
        let Some(first) = trace
            .node_sessions(source)
            .map(|s| s.start)
            .find(|&t| t < horizon)
        else {
            continue;
        };
        let destination = trace.nodes().find(|&d| d != source).unwrap();
        let destination = if source % 3 == 0 {
            destination
        } else {
            trace.nodes().filter(|&d| d != source).nth(source as usize % 5).unwrap_or(destination)
        };
        bundles.push(Bundle { id, source, destination, created_at: first });
        id += 1;
        if bundles.len() == count {
            break;
        }
    }
    bundles
}
