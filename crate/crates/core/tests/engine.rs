//! Engine behavior on hand-built scenarios and experiment structure.

use mobysim_core::engine::{
    generate_workload, run_experiment, run_simulation, Bundle, ExperimentKind, ExperimentSpec,
    SimParams,
};
use mobysim_core::routing::Policy;
use mobysim_core::trace::{generate_synthetic, Session, SyntheticConfig, Trace};
use mobysim_core::SECONDS_PER_DAY;

/// Three nodes, two locations: A sits at location 0, B at location 1, C
/// moves between them. A meets C at t=10, C meets B at t=20; A and B are
/// never co-located. Patterns over the full span: A=(1,0), C=(0.5,0.5),
/// B=(0,1).
fn hand_trace() -> Trace {
    let sessions = vec![
        Session { node: 0, location: 0, start: 0, end: 20 },
        Session { node: 2, location: 0, start: 10, end: 20 },
        Session { node: 2, location: 1, start: 20, end: 30 },
        Session { node: 1, location: 1, start: 20, end: 40 },
    ];
    Trace::new(sessions, 3, 2)
}

fn hand_params() -> SimParams {
    SimParams { duration: Some(40), ..Default::default() }
}

fn hand_bundle() -> Vec<Bundle> {
    vec![Bundle { id: 0, source: 0, destination: 1, created_at: 0 }]
}

#[test]
fn golden_mobyspace_delivers_via_the_moving_relay() {
    let trace = hand_trace();
    let result =
        run_simulation(&trace, &[0, 1, 2], &hand_bundle(), Policy::MobySpace, &hand_params(), 7)
            .unwrap();
    let o = &result.outcomes[0];
    assert_eq!(o.delivered_at, Some(20));
    assert_eq!(o.delay(), Some(20));
    assert_eq!(o.hops, Some(2));
    assert_eq!(o.path, vec![0, 2, 1]);
    assert_eq!(result.transmissions, 2);
}

#[test]
fn golden_epidemic_matches_the_single_path() {
    let trace = hand_trace();
    let result =
        run_simulation(&trace, &[0, 1, 2], &hand_bundle(), Policy::Epidemic, &hand_params(), 7)
            .unwrap();
    let o = &result.outcomes[0];
    assert_eq!(o.delivered_at, Some(20));
    assert_eq!(o.hops, Some(2));
    assert_eq!(o.path, vec![0, 2, 1]);
}

#[test]
fn golden_opportunistic_never_delivers() {
    let trace = hand_trace();
    let result = run_simulation(
        &trace,
        &[0, 1, 2],
        &hand_bundle(),
        Policy::Opportunistic,
        &hand_params(),
        7,
    )
    .unwrap();
    let o = &result.outcomes[0];
    assert!(!o.delivered());
    assert_eq!(o.path, vec![0]);
    assert_eq!(result.transmissions, 0);
}

#[test]
fn golden_potato_bounces_and_strands() {
    // t=10: A forwards to C (only neighbor). t=11: C, unmarked, must pick
    // its only neighbor A, bouncing the bundle back. Both are then marked
    // for the visit, A departs at t=20 unattached, and the bundle strands.
    let trace = hand_trace();
    let result =
        run_simulation(&trace, &[0, 1, 2], &hand_bundle(), Policy::Potato, &hand_params(), 7)
            .unwrap();
    let o = &result.outcomes[0];
    assert!(!o.delivered());
    assert_eq!(o.path, vec![0, 2, 0]);
    assert_eq!(result.transmissions, 2);
}

#[test]
fn bundle_created_past_horizon_is_rejected() {
    let trace = hand_trace();
    let bundles = vec![Bundle { id: 0, source: 0, destination: 1, created_at: 50 }];
    assert!(run_simulation(&trace, &[0, 1, 2], &bundles, Policy::Epidemic, &hand_params(), 7)
        .is_err());
}

#[test]
fn self_addressed_bundle_is_rejected() {
    let trace = hand_trace();
    let bundles = vec![Bundle { id: 0, source: 0, destination: 0, created_at: 0 }];
    assert!(run_simulation(&trace, &[0, 1, 2], &bundles, Policy::Epidemic, &hand_params(), 7)
        .is_err());
}

fn synthetic_15_days(seed: u64) -> Trace {
    generate_synthetic(&SyntheticConfig {
        node_count: 80,
        location_count: 20,
        duration: 15 * SECONDS_PER_DAY,
        sessions_per_day: 5.0,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn small_params() -> SimParams {
    SimParams {
        sampled_users: 40,
        traffic_sources: 12,
        duration: Some(15 * SECONDS_PER_DAY),
        ..Default::default()
    }
}

#[test]
fn workload_has_the_configured_shape() {
    let trace = synthetic_15_days(61);
    let params = small_params();
    let sampled: Vec<u32> = (0..40).collect();
    let sources: Vec<u32> = trace
        .nodes()
        .filter(|&n| n < 40 && trace.node_sessions(n).next().is_some())
        .take(12)
        .collect();
    assert_eq!(sources.len(), 12);
    let bundles = generate_workload(&trace, &sources, &sampled, &params, 3).unwrap();
    assert_eq!(bundles.len(), 12 * 5);
    for b in &bundles {
        assert_ne!(b.source, b.destination);
        assert!(sampled.contains(&b.destination));
        // creation = the source's first session start inside the window
        let first = trace.node_sessions(b.source).map(|s| s.start).next().unwrap();
        assert_eq!(b.created_at, first);
    }
    // per-source destinations are distinct
    for source in &sources {
        let mut dests: Vec<u32> =
            bundles.iter().filter(|b| b.source == *source).map(|b| b.destination).collect();
        let len = dests.len();
        dests.sort_unstable();
        dests.dedup();
        assert_eq!(dests.len(), len);
    }
    // deterministic given the seed
    let again = generate_workload(&trace, &sources, &sampled, &params, 3).unwrap();
    assert_eq!(bundles, again);
    let other = generate_workload(&trace, &sources, &sampled, &params, 4).unwrap();
    assert_ne!(bundles, other);
}

#[test]
fn workload_needs_enough_destination_candidates() {
    let trace = synthetic_15_days(62);
    let params = small_params();
    let sampled: Vec<u32> = (0..5).collect(); // a source sees only 4 others
    let sources = vec![0u32];
    assert!(generate_workload(&trace, &sources, &sampled, &params, 3).is_err());
}

#[test]
fn identical_seeds_give_bit_identical_results() {
    let trace = synthetic_15_days(63);
    let spec = ExperimentSpec {
        params: small_params(),
        policies: vec![Policy::MobySpace, Policy::Potato],
        runs: 2,
        seed: 11,
        kind: ExperimentKind::Standard,
        cdf_bins: 20,
    };
    let a = run_experiment(&trace, &spec).unwrap();
    let b = run_experiment(&trace, &spec).unwrap();
    for (sa, sb) in a.scenarios.iter().zip(&b.scenarios) {
        for (pa, pb) in sa.policies.iter().zip(&sb.policies) {
            assert_eq!(pa.results, pb.results);
            assert_eq!(pa.per_run, pb.per_run);
        }
    }
}

#[test]
fn paired_runs_share_sampling_and_workload() {
    let trace = synthetic_15_days(64);
    let spec = ExperimentSpec {
        params: small_params(),
        policies: vec![Policy::Epidemic, Policy::MobySpace],
        runs: 5,
        seed: 5,
        kind: ExperimentKind::Standard,
        cdf_bins: 20,
    };
    let out = run_experiment(&trace, &spec).unwrap();
    assert_eq!(out.scenarios.len(), 1);
    let scenario = &out.scenarios[0];
    assert_eq!(scenario.policies.len(), 2);
    for p in &scenario.policies {
        assert_eq!(p.results.len(), 5);
        assert_eq!(p.per_run.len(), 5);
    }
    // same run index -> same bundles for both policies
    let (epidemic, mobyspace) = (&scenario.policies[0], &scenario.policies[1]);
    for run in 0..5 {
        let a = &epidemic.results[run].outcomes;
        let b = &mobyspace.results[run].outcomes;
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_eq!((x.source, x.destination, x.created_at), (y.source, y.destination, y.created_at));
        }
    }
}

#[test]
fn entropy_bin_experiment_has_one_scenario_per_bin() {
    let trace = generate_synthetic(&SyntheticConfig {
        node_count: 150,
        location_count: 25,
        duration: 10 * SECONDS_PER_DAY,
        sessions_per_day: 6.0,
        seed: 65,
        ..Default::default()
    })
    .unwrap();
    let spec = ExperimentSpec {
        params: SimParams {
            sampled_users: 15,
            traffic_sources: 5,
            duration: Some(10 * SECONDS_PER_DAY),
            ..Default::default()
        },
        policies: vec![Policy::MobySpace],
        runs: 2,
        seed: 2,
        kind: ExperimentKind::EntropyBins(vec![(0.0, 0.45), (0.45, 1.01)]),
        cdf_bins: 10,
    };
    let out = run_experiment(&trace, &spec).unwrap();
    assert_eq!(out.scenarios.len(), 2);
    assert_eq!(out.scenarios[0].scenario.label, "entropy-0.00-0.45");
    assert_eq!(out.scenarios[1].scenario.label, "entropy-0.45-1.01");
}

#[test]
fn reduction_experiment_runs_levels_plus_full_with_mobyspace_only() {
    let trace = synthetic_15_days(66);
    let spec = ExperimentSpec {
        params: SimParams {
            sampled_users: 25,
            traffic_sources: 8,
            duration: Some(15 * SECONDS_PER_DAY),
            ..Default::default()
        },
        policies: Policy::ALL.to_vec(),
        runs: 2,
        seed: 3,
        kind: ExperimentKind::Reduction(vec![1, 2]),
        cdf_bins: 10,
    };
    let out = run_experiment(&trace, &spec).unwrap();
    let labels: Vec<&str> =
        out.scenarios.iter().map(|s| s.scenario.label.as_str()).collect();
    assert_eq!(labels, vec!["l-1", "l-2", "l-full"]);
    for s in &out.scenarios {
        assert_eq!(s.policies.len(), 1);
        assert_eq!(s.policies[0].policy, Policy::MobySpace);
    }
}

#[test]
fn experiments_need_two_runs() {
    let trace = synthetic_15_days(67);
    let spec = ExperimentSpec { runs: 1, params: small_params(), ..Default::default() };
    assert!(run_experiment(&trace, &spec).is_err());
}
