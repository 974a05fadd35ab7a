//! The five forwarding policies behind one decision interface.
//!
//! Policies are pure functions of a [`PolicyContext`] (plus a seeded
//! stream for the one policy that draws); all mutable state lives in the
//! engine. Single-copy policies return [`Decision::Keep`] or
//! [`Decision::Forward`]; only epidemic replicates.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mobyspace::{distance, PatternTable};
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    Epidemic,
    Opportunistic,
    Random,
    Potato,
    MobySpace,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Epidemic,
        Policy::Opportunistic,
        Policy::Random,
        Policy::Potato,
        Policy::MobySpace,
    ];

    /// Everything except epidemic keeps exactly one custodian per bundle.
    pub fn is_single_copy(self) -> bool {
        !matches!(self, Policy::Epidemic)
    }

    pub fn needs_patterns(self) -> bool {
        matches!(self, Policy::MobySpace)
    }

    pub fn needs_preferences(self) -> bool {
        matches!(self, Policy::Random)
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::Epidemic => "epidemic",
            Policy::Opportunistic => "opportunistic",
            Policy::Random => "random",
            Policy::Potato => "potato",
            Policy::MobySpace => "mobyspace",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown policy `{0}`; expected epidemic|opportunistic|random|potato|mobyspace")]
pub struct UnknownPolicy(String);

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epidemic" => Ok(Policy::Epidemic),
            "opportunistic" => Ok(Policy::Opportunistic),
            "random" => Ok(Policy::Random),
            "potato" => Ok(Policy::Potato),
            "mobyspace" => Ok(Policy::MobySpace),
            other => Err(UnknownPolicy(other.to_string())),
        }
    }
}

/// Static per-destination preference lists for the random policy: one
/// seeded permutation of the population per destination, generated at run
/// start. Lower rank means more preferred.
#[derive(Debug, Clone)]
pub struct PreferenceTable {
    ranks: HashMap<NodeId, HashMap<NodeId, u32>>,
}

impl PreferenceTable {
    pub fn generate(population: &[NodeId], destinations: impl IntoIterator<Item = NodeId>, seed: u64) -> Self {
        let mut ranks = HashMap::new();
        for dest in destinations {
            let mut order: Vec<NodeId> = population.to_vec();
            order.sort_unstable();
            let mut rng = crate::rng::stream(seed, u64::from(dest), "preference");
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let list: HashMap<NodeId, u32> = order.into_iter().zip(0u32..).collect();
            ranks.insert(dest, list);
        }
        PreferenceTable { ranks }
    }

    pub fn rank(&self, destination: NodeId, node: NodeId) -> Option<u32> {
        self.ranks.get(&destination)?.get(&node).copied()
    }
}

/// Everything a policy may look at when deciding about one bundle.
#[derive(Clone, Copy)]
pub struct PolicyContext<'a> {
    pub custodian: NodeId,
    pub bundle: u32,
    pub destination: NodeId,
    /// Current neighbors of the custodian, sorted, custodian excluded.
    pub neighbors: &'a [NodeId],
    pub patterns: Option<&'a PatternTable>,
    pub preferences: Option<&'a PreferenceTable>,
    /// Ordinal of the custodian's current location visit.
    pub visit_epoch: u32,
    /// Whether the custodian already handled this bundle during the
    /// current visit (hot-potato bookkeeping, tracked by the engine).
    pub handled_this_visit: bool,
    /// Nodes already holding a copy of this bundle (epidemic bookkeeping).
    pub copy_holders: Option<&'a BTreeSet<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Keep,
    Forward(NodeId),
    /// Epidemic only: hand a copy to every listed neighbor.
    Replicate(Vec<NodeId>),
}

/// A decision plus whether it was taken blind (destination pattern
/// unavailable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub decision: Decision,
    pub blind: bool,
}

impl Verdict {
    fn of(decision: Decision) -> Self {
        Verdict { decision, blind: false }
    }
}

/// Dispatch a contact opportunity to the policy's decision rule.
pub fn decide(policy: Policy, ctx: &PolicyContext<'_>, rng: &mut ChaCha8Rng) -> Verdict {
    match policy {
        Policy::Epidemic => epidemic_decide(ctx),
        Policy::Opportunistic => opportunistic_decide(ctx),
        Policy::Random => random_decide(ctx),
        Policy::Potato => potato_decide(ctx, rng),
        Policy::MobySpace => mobyspace_decide(ctx),
    }
}

/// Replicate to every neighbor that does not already hold a copy.
pub fn epidemic_decide(ctx: &PolicyContext<'_>) -> Verdict {
    let holders = ctx.copy_holders.expect("epidemic requires copy-holder bookkeeping");
    let targets: Vec<NodeId> = ctx.neighbors.iter().copied().filter(|n| !holders.contains(n)).collect();
    if targets.is_empty() {
        Verdict::of(Decision::Keep)
    } else {
        Verdict::of(Decision::Replicate(targets))
    }
}

/// Wait to meet the destination; a delivered bundle always has one hop.
pub fn opportunistic_decide(ctx: &PolicyContext<'_>) -> Verdict {
    if ctx.neighbors.binary_search(&ctx.destination).is_ok() {
        Verdict::of(Decision::Forward(ctx.destination))
    } else {
        Verdict::of(Decision::Keep)
    }
}

/// Forward to the most preferred neighbor on the destination's preference
/// list, only if it outranks the custodian. Loop-free by construction.
pub fn random_decide(ctx: &PolicyContext<'_>) -> Verdict {
    if ctx.neighbors.binary_search(&ctx.destination).is_ok() {
        return Verdict::of(Decision::Forward(ctx.destination));
    }
    let prefs = ctx.preferences.expect("random routing requires preference lists");
    let my_rank = prefs
        .rank(ctx.destination, ctx.custodian)
        .expect("custodian missing from preference list");
    let best = ctx
        .neighbors
        .iter()
        .filter_map(|&n| prefs.rank(ctx.destination, n).map(|r| (r, n)))
        .min();
    match best {
        Some((rank, node)) if rank < my_rank => Verdict::of(Decision::Forward(node)),
        _ => Verdict::of(Decision::Keep),
    }
}

/// Forward to a uniformly random neighbor, at most once per location
/// visit; always deliver when the destination is present.
pub fn potato_decide(ctx: &PolicyContext<'_>, rng: &mut ChaCha8Rng) -> Verdict {
    if ctx.neighbors.binary_search(&ctx.destination).is_ok() {
        return Verdict::of(Decision::Forward(ctx.destination));
    }
    if ctx.neighbors.is_empty() || ctx.handled_this_visit {
        return Verdict::of(Decision::Keep);
    }
    let pick = ctx.neighbors[rng.random_range(0..ctx.neighbors.len())];
    Verdict::of(Decision::Forward(pick))
}

/// Forward toward the neighbor whose pattern is strictly closest to the
/// destination's; keep custody on ties. Nodes without patterns are
/// invisible as relays; a missing destination pattern makes the decision
/// blind.
pub fn mobyspace_decide(ctx: &PolicyContext<'_>) -> Verdict {
    if ctx.neighbors.binary_search(&ctx.destination).is_ok() {
        return Verdict::of(Decision::Forward(ctx.destination));
    }
    let patterns = ctx.patterns.expect("mobyspace routing requires a pattern table");
    let Some(dest_pattern) = patterns.get(ctx.destination) else {
        return Verdict { decision: Decision::Keep, blind: true };
    };
    let to_dest = |node: NodeId| -> Option<f64> {
        let p = patterns.get(node)?;
        Some(distance(p, dest_pattern).expect("patterns of one table share a dimension"))
    };
    let own = to_dest(ctx.custodian).unwrap_or(f64::INFINITY);
    // neighbors are ascending, so the first strict minimum is the lowest id
    let mut best: Option<(f64, NodeId)> = None;
    for &n in ctx.neighbors {
        if let Some(d) = to_dest(n) {
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, n));
            }
        }
    }
    match best {
        Some((d, node)) if d < own => Verdict::of(Decision::Forward(node)),
        _ => Verdict::of(Decision::Keep),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobyspace::PatternWindow;
    use crate::trace::{Session, Trace};

    fn ctx<'a>(
        custodian: NodeId,
        destination: NodeId,
        neighbors: &'a [NodeId],
    ) -> PolicyContext<'a> {
        PolicyContext {
            custodian,
            bundle: 0,
            destination,
            neighbors,
            patterns: None,
            preferences: None,
            visit_epoch: 0,
            handled_this_visit: false,
            copy_holders: None,
        }
    }

    #[test]
    fn epidemic_replicates_to_every_non_holder() {
        let holders: BTreeSet<NodeId> = [0].into_iter().collect();
        let neighbors = [1, 2];
        let mut c = ctx(0, 9, &neighbors);
        c.copy_holders = Some(&holders);
        assert_eq!(epidemic_decide(&c).decision, Decision::Replicate(vec![1, 2]));

        let all: BTreeSet<NodeId> = [0, 1, 2].into_iter().collect();
        c.copy_holders = Some(&all);
        assert_eq!(epidemic_decide(&c).decision, Decision::Keep);

        let mut lonely = ctx(0, 9, &[]);
        let just_me: BTreeSet<NodeId> = [0].into_iter().collect();
        lonely.copy_holders = Some(&just_me);
        assert_eq!(epidemic_decide(&lonely).decision, Decision::Keep);
    }

    #[test]
    fn opportunistic_waits_for_destination() {
        assert_eq!(opportunistic_decide(&ctx(0, 2, &[1, 2])).decision, Decision::Forward(2));
        assert_eq!(opportunistic_decide(&ctx(0, 9, &[1, 2])).decision, Decision::Keep);
        assert_eq!(opportunistic_decide(&ctx(0, 9, &[])).decision, Decision::Keep);
    }

    // preference list [D, C, A, B] most preferred first, as ranks
    fn fixed_prefs(destination: NodeId) -> PreferenceTable {
        let mut ranks = HashMap::new();
        let list: HashMap<NodeId, u32> = [(3, 0), (2, 1), (0, 2), (1, 3)].into_iter().collect();
        ranks.insert(destination, list);
        PreferenceTable { ranks }
    }

    #[test]
    fn random_forwards_only_to_better_ranked() {
        let prefs = fixed_prefs(3);
        // custodian A(0) rank 2, neighbors B(1) rank 3 and C(2) rank 1
        let neighbors = [1, 2];
        let mut c = ctx(0, 3, &neighbors);
        c.preferences = Some(&prefs);
        assert_eq!(random_decide(&c).decision, Decision::Forward(2));

        // custodian C(2) rank 1, neighbors A(0) and B(1) both ranked worse
        let neighbors = [0, 1];
        let mut c = ctx(2, 3, &neighbors);
        c.preferences = Some(&prefs);
        assert_eq!(random_decide(&c).decision, Decision::Keep);
    }

    #[test]
    fn random_short_circuits_to_destination() {
        let prefs = fixed_prefs(3);
        let neighbors = [1, 3];
        let mut c = ctx(0, 3, &neighbors);
        c.preferences = Some(&prefs);
        assert_eq!(random_decide(&c).decision, Decision::Forward(3));
    }

    #[test]
    fn random_custody_ranks_strictly_decrease() {
        let population: Vec<NodeId> = (0..20).collect();
        let prefs = PreferenceTable::generate(&population, [19], 5);
        let mut custodian = 0;
        let mut last_rank = prefs.rank(19, 0).unwrap();
        // walk forwards through a clique of everyone; ranks must fall
        for _ in 0..30 {
            let neighbors: Vec<NodeId> = population.iter().copied().filter(|&n| n != custodian && n != 19).collect();
            let mut c = ctx(custodian, 19, &neighbors);
            c.preferences = Some(&prefs);
            match random_decide(&c).decision {
                Decision::Forward(next) => {
                    let rank = prefs.rank(19, next).unwrap();
                    assert!(rank < last_rank, "rank did not decrease");
                    last_rank = rank;
                    custodian = next;
                }
                Decision::Keep => break,
                Decision::Replicate(_) => unreachable!(),
            }
        }
        assert_eq!(last_rank, 0, "walk should end at the most preferred node");
    }

    #[test]
    fn potato_picks_uniformly_and_respects_visit_marks() {
        let neighbors = [1, 2];
        let c = ctx(0, 9, &neighbors);
        let mut rng = crate::rng::stream(1, 0, "potato-test");
        let mut counts = [0u32; 2];
        for _ in 0..1000 {
            match potato_decide(&c, &mut rng).decision {
                Decision::Forward(1) => counts[0] += 1,
                Decision::Forward(2) => counts[1] += 1,
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(counts.iter().all(|&n| (400..=600).contains(&n)), "{counts:?}");

        let mut marked = ctx(0, 9, &neighbors);
        marked.handled_this_visit = true;
        assert_eq!(potato_decide(&marked, &mut rng).decision, Decision::Keep);
        assert_eq!(potato_decide(&ctx(0, 9, &[]), &mut rng).decision, Decision::Keep);
    }

    fn pattern_table() -> PatternTable {
        // A=(1,0) at loc 0; C=(0.5,0.5); B=(0,1) at loc 1
        let sessions = vec![
            Session { node: 0, location: 0, start: 0, end: 100 },
            Session { node: 2, location: 0, start: 0, end: 50 },
            Session { node: 2, location: 1, start: 50, end: 100 },
            Session { node: 1, location: 1, start: 0, end: 100 },
        ];
        let trace = Trace::new(sessions, 4, 2);
        let w = PatternWindow::new(0, 100).unwrap();
        PatternTable::compute(&trace, &[0, 1, 2, 3], w, None)
    }

    #[test]
    fn mobyspace_forwards_to_strictly_closer_neighbor() {
        let table = pattern_table();
        let neighbors = [2];
        let mut c = ctx(0, 1, &neighbors);
        c.patterns = Some(&table);
        // d(A,B)=sqrt(2) > d(C,B)=sqrt(0.5)
        assert_eq!(mobyspace_decide(&c).decision, Decision::Forward(2));
    }

    #[test]
    fn mobyspace_keeps_on_equal_distance() {
        // neighbor with the identical pattern: same distance, keep custody
        let table = {
            let sessions = vec![
                Session { node: 0, location: 0, start: 0, end: 100 },
                Session { node: 1, location: 0, start: 0, end: 100 },
                Session { node: 2, location: 1, start: 0, end: 100 },
            ];
            let trace = Trace::new(sessions, 3, 2);
            PatternTable::compute(&trace, &[0, 1, 2], PatternWindow::new(0, 100).unwrap(), None)
        };
        let neighbors = [1];
        let mut c = ctx(0, 2, &neighbors);
        c.patterns = Some(&table);
        assert_eq!(mobyspace_decide(&c).decision, Decision::Keep);
    }

    #[test]
    fn mobyspace_short_circuits_to_destination() {
        let table = pattern_table();
        let neighbors = [1, 2];
        let mut c = ctx(0, 1, &neighbors);
        c.patterns = Some(&table);
        assert_eq!(mobyspace_decide(&c).decision, Decision::Forward(1));
    }

    #[test]
    fn mobyspace_blind_without_destination_pattern() {
        let table = pattern_table();
        // node 3 has no sessions, so no pattern
        let neighbors = [2];
        let mut c = ctx(0, 3, &neighbors);
        c.patterns = Some(&table);
        let v = mobyspace_decide(&c);
        assert_eq!(v.decision, Decision::Keep);
        assert!(v.blind);
    }

    #[test]
    fn mobyspace_skips_patternless_relays_and_breaks_ties_low() {
        let sessions = vec![
            Session { node: 0, location: 0, start: 0, end: 100 },
            Session { node: 1, location: 1, start: 0, end: 100 },
            Session { node: 2, location: 1, start: 0, end: 100 },
            Session { node: 4, location: 1, start: 0, end: 100 },
        ];
        let trace = Trace::new(sessions, 5, 2);
        let table = PatternTable::compute(&trace, &[0, 1, 2, 3, 4], PatternWindow::new(0, 100).unwrap(), None);
        // 3 has no pattern; 1, 2 and 4 tie at distance 0 from the
        // destination pattern; lowest id wins
        let neighbors = [1, 2, 3, 4];
        let mut c = ctx(0, 9, &neighbors);
        c.patterns = Some(&table);
        // destination 9 has no pattern -> blind keep
        assert!(mobyspace_decide(&c).blind);
        let sessions2 = vec![Session { node: 9, location: 1, start: 0, end: 100 }];
        let mut with_dest = trace.sessions().to_vec();
        with_dest.extend(sessions2);
        let trace2 = Trace::new(with_dest, 10, 2);
        let table2 = PatternTable::compute(&trace2, &[0, 1, 2, 3, 4, 9], PatternWindow::new(0, 100).unwrap(), None);
        let mut c = ctx(0, 9, &neighbors);
        c.patterns = Some(&table2);
        assert_eq!(mobyspace_decide(&c).decision, Decision::Forward(1));
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("gossip".parse::<Policy>().is_err());
    }
}
