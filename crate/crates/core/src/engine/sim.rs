//! Event-driven custody simulation.
//!
//! Equivalent to stepping the clock by `time_step` and letting every
//! custodian decide each step, but driven by the contact-event stream: a
//! parked bundle's decision can only change when its holder's occupancy
//! context changes (someone arrives or departs, the holder moves) or the
//! bundle itself moves, so only those (holder, bundle) pairs are
//! re-examined. A bundle moved at step `t` acts again no earlier than
//! `t + time_step`.

use std::collections::{BTreeSet, HashMap};

use super::{Bundle, BundleOutcome, EngineError, RunResult, SharedInputs};
use crate::contact::ContactEvent;
use crate::routing::{decide, Decision, Policy, PolicyContext};
use crate::{LocationId, NodeId};

/// Visit epoch handed to policies while the holder is unattached.
const NO_VISIT: u32 = u32::MAX;

pub(super) fn simulate(
    inputs: SharedInputs<'_>,
    bundles: &[Bundle],
    policy: Policy,
    window: (u64, u64),
    time_step: u64,
    seed: u64,
) -> Result<RunResult, EngineError> {
    let (start, horizon) = window;
    let index = inputs.index;
    if policy.needs_patterns() && inputs.patterns.is_none() {
        return Err(EngineError::MissingPatterns(policy));
    }
    if policy.needs_preferences() && inputs.preferences.is_none() {
        return Err(EngineError::InvalidSpec("random policy needs preference lists".into()));
    }
    for b in bundles {
        if b.source == b.destination {
            return Err(EngineError::InvalidSpec(format!("bundle {} sent to its own source", b.id)));
        }
        for node in [b.source, b.destination] {
            if !index.contains(node) {
                return Err(EngineError::NodeOutsideSubset(node));
            }
        }
        if b.created_at < start || b.created_at >= horizon {
            return Err(EngineError::BundleAfterHorizon {
                bundle: b.id,
                created_at: b.created_at,
                horizon,
            });
        }
    }

    let mut state = State::new(inputs, bundles, policy, seed);
    let events = index.contact_events();
    let mut creations: Vec<(u64, usize)> =
        bundles.iter().enumerate().map(|(i, b)| (b.created_at, i)).collect();
    creations.sort_unstable();

    let snap = |t: u64| -> u64 {
        if t <= start {
            start
        } else {
            start + (t - start).div_ceil(time_step) * time_step
        }
    };

    let (mut ev_i, mut cr_i) = (0usize, 0usize);
    let mut t = start;
    loop {
        if t >= horizon {
            break;
        }
        while ev_i < events.len() && events[ev_i].time <= t {
            state.apply_event(&events[ev_i]);
            ev_i += 1;
        }
        while cr_i < creations.len() && creations[cr_i].0 <= t {
            state.activate(creations[cr_i].1);
            cr_i += 1;
        }

        state.process_step(t);
        debug_assert!(state.conserved(), "custody conservation violated at t={t}");

        let next_forced = if state.wake.is_empty() { u64::MAX } else { t + time_step };
        let next_event = events.get(ev_i).map(|e| snap(e.time)).unwrap_or(u64::MAX);
        let next_creation = creations.get(cr_i).map(|&(c, _)| snap(c)).unwrap_or(u64::MAX);
        let next = next_forced.min(next_event).min(next_creation);
        if next >= horizon || next == u64::MAX {
            break;
        }
        debug_assert!(next > t, "time must advance");
        t = next;
    }

    Ok(state.into_result(bundles, policy))
}

struct State<'a> {
    inputs: SharedInputs<'a>,
    policy: Policy,
    bundles: &'a [Bundle],

    // live occupancy, replayed from the event stream
    occupants: Vec<BTreeSet<NodeId>>,
    node_location: HashMap<NodeId, (LocationId, u32)>,
    visit_counter: HashMap<NodeId, u32>,

    // (holder, bundle position) pairs to examine at the next step
    wake: BTreeSet<(NodeId, u32)>,
    // bundles currently held per node (delivered/frozen removed)
    holds: HashMap<NodeId, BTreeSet<u32>>,

    active: Vec<bool>,
    custodian: Vec<NodeId>,
    paths: Vec<Vec<NodeId>>,
    delivered_at: Vec<Option<u64>>,
    delivered_hops: Vec<Option<u32>>,
    delivered_path: Vec<Option<Vec<NodeId>>>,
    // potato: node -> visit epoch of its last handling, per bundle
    handled: Vec<HashMap<NodeId, u32>>,
    // epidemic: copy holders and per-holder custody paths, per bundle
    holders: Vec<BTreeSet<NodeId>>,
    copy_paths: Vec<HashMap<NodeId, Vec<NodeId>>>,
    frozen: Vec<bool>,

    transmissions: u64,
    blind_decisions: u64,
    rng: rand_chacha::ChaCha8Rng,
}

impl<'a> State<'a> {
    fn new(inputs: SharedInputs<'a>, bundles: &'a [Bundle], policy: Policy, seed: u64) -> Self {
        let n = bundles.len();
        State {
            inputs,
            policy,
            bundles,
            occupants: vec![BTreeSet::new(); inputs.index.location_count()],
            node_location: HashMap::new(),
            visit_counter: HashMap::new(),
            wake: BTreeSet::new(),
            holds: HashMap::new(),
            active: vec![false; n],
            custodian: bundles.iter().map(|b| b.source).collect(),
            paths: bundles.iter().map(|b| vec![b.source]).collect(),
            delivered_at: vec![None; n],
            delivered_hops: vec![None; n],
            delivered_path: vec![None; n],
            handled: vec![HashMap::new(); n],
            holders: vec![BTreeSet::new(); n],
            copy_paths: vec![HashMap::new(); n],
            frozen: vec![false; n],
            transmissions: 0,
            blind_decisions: 0,
            rng: crate::rng::stream(seed, 0, "potato"),
        }
    }

    fn apply_event(&mut self, event: &ContactEvent) {
        let location = event.location as usize;
        for d in &event.departures {
            self.occupants[location].remove(d);
            self.node_location.remove(d);
            self.wake_held(*d);
        }
        for a in &event.arrivals {
            self.occupants[location].insert(*a);
            let visit = self.visit_counter.entry(*a).or_insert(0);
            *visit += 1;
            self.node_location.insert(*a, (event.location, *visit));
            self.wake_held(*a);
        }
        // everyone now at the location sees a changed neighbor set
        for node in self.occupants[location].clone() {
            self.wake_held(node);
        }
    }

    fn wake_held(&mut self, node: NodeId) {
        if let Some(held) = self.holds.get(&node) {
            for &b in held {
                self.wake.insert((node, b));
            }
        }
    }

    fn activate(&mut self, b: usize) {
        self.active[b] = true;
        let source = self.bundles[b].source;
        self.holds.entry(source).or_default().insert(b as u32);
        if self.policy == Policy::Epidemic {
            self.holders[b].insert(source);
            self.copy_paths[b].insert(source, vec![source]);
        }
        self.wake.insert((source, b as u32));
    }

    fn process_step(&mut self, t: u64) {
        let snapshot: Vec<(NodeId, u32)> = std::mem::take(&mut self.wake).into_iter().collect();
        for (node, bi) in snapshot {
            let b = bi as usize;
            if !self.active[b] || self.delivered_at[b].is_some() || self.frozen[b] {
                continue;
            }
            if self.policy.is_single_copy() && self.custodian[b] != node {
                continue; // custody moved after this wake was queued
            }
            if self.policy == Policy::Epidemic && !self.holders[b].contains(&node) {
                continue;
            }

            let (neighbors, visit) = match self.node_location.get(&node) {
                Some(&(location, visit)) => {
                    let neighbors: Vec<NodeId> = self.occupants[location as usize]
                        .iter()
                        .copied()
                        .filter(|&n| n != node)
                        .collect();
                    (neighbors, visit)
                }
                None => (Vec::new(), NO_VISIT),
            };

            let verdict = {
                let ctx = PolicyContext {
                    custodian: node,
                    bundle: self.bundles[b].id,
                    destination: self.bundles[b].destination,
                    neighbors: &neighbors,
                    patterns: self.inputs.patterns,
                    preferences: self.inputs.preferences,
                    visit_epoch: visit,
                    handled_this_visit: self.handled[b].get(&node) == Some(&visit),
                    copy_holders: (self.policy == Policy::Epidemic).then_some(&self.holders[b]),
                };
                decide(self.policy, &ctx, &mut self.rng)
            };
            if verdict.blind {
                self.blind_decisions += 1;
            }
            match verdict.decision {
                Decision::Keep => {}
                Decision::Forward(target) => {
                    debug_assert!(neighbors.binary_search(&target).is_ok());
                    self.forward(b, node, target, visit, t);
                }
                Decision::Replicate(targets) => {
                    debug_assert!(self.policy == Policy::Epidemic);
                    self.replicate(b, node, &targets, t);
                }
            }
        }
    }

    fn forward(&mut self, b: usize, from: NodeId, target: NodeId, visit: u32, t: u64) {
        let bi = b as u32;
        let destination = self.bundles[b].destination;
        self.transmissions += 1;
        if self.policy == Policy::Potato && target != destination {
            self.handled[b].insert(from, visit);
        }
        self.custodian[b] = target;
        self.paths[b].push(target);
        if let Some(held) = self.holds.get_mut(&from) {
            held.remove(&bi);
        }
        if target == destination {
            self.delivered_at[b] = Some(t);
            self.delivered_hops[b] = Some((self.paths[b].len() - 1) as u32);
        } else {
            self.holds.entry(target).or_default().insert(bi);
            self.wake.insert((target, bi));
        }
    }

    fn replicate(&mut self, b: usize, from: NodeId, targets: &[NodeId], t: u64) {
        let bi = b as u32;
        let destination = self.bundles[b].destination;
        let parent = self.copy_paths[b][&from].clone();
        for &target in targets {
            self.transmissions += 1;
            self.holders[b].insert(target);
            let mut path = parent.clone();
            path.push(target);
            if target == destination {
                self.delivered_at[b] = Some(t);
                self.delivered_hops[b] = Some((path.len() - 1) as u32);
                self.delivered_path[b] = Some(path.clone());
                self.frozen[b] = true;
            } else {
                self.holds.entry(target).or_default().insert(bi);
                self.wake.insert((target, bi));
            }
            self.copy_paths[b].insert(target, path);
        }
        if self.frozen[b] {
            // retire every copy so later events stop waking them
            for holder in self.holders[b].clone() {
                if let Some(held) = self.holds.get_mut(&holder) {
                    held.remove(&bi);
                }
            }
        }
    }

    /// Single-copy policies: every active undelivered bundle is held by
    /// exactly one node, and the holds table agrees.
    fn conserved(&self) -> bool {
        if !self.policy.is_single_copy() {
            return true;
        }
        self.bundles.iter().enumerate().all(|(b, _)| {
            if !self.active[b] || self.delivered_at[b].is_some() {
                return true;
            }
            let holder = self.custodian[b];
            self.holds.get(&holder).is_some_and(|held| held.contains(&(b as u32)))
                && self
                    .holds
                    .iter()
                    .filter(|(_, held)| held.contains(&(b as u32)))
                    .count()
                    == 1
        })
    }

    fn into_result(self, bundles: &[Bundle], policy: Policy) -> RunResult {
        let outcomes = bundles
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let path = match policy {
                    Policy::Epidemic => {
                        self.delivered_path[i].clone().unwrap_or_else(|| vec![b.source])
                    }
                    _ => self.paths[i].clone(),
                };
                BundleOutcome {
                    bundle: b.id,
                    source: b.source,
                    destination: b.destination,
                    created_at: b.created_at,
                    delivered_at: self.delivered_at[i],
                    hops: self.delivered_hops[i],
                    path,
                }
            })
            .collect();
        RunResult {
            policy,
            outcomes,
            transmissions: self.transmissions,
            blind_decisions: self.blind_decisions,
        }
    }
}
