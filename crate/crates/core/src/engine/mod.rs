//! Simulation driver: workload generation, bundle custody over replayed
//! contacts, and multi-run experiments with paired policy comparison.

mod learning;
mod sim;

pub use learning::{learning_experiment, LearningPoint};

use std::sync::Arc;

use crate::contact::{build_index, ContactError, OccupancyIndex};
use crate::metrics::{self, CdfPoint, MetricsError, PolicyAggregate, RunSummary};
use crate::mobyspace::{PatternError, PatternTable, PatternWindow};
use crate::routing::{Policy, PreferenceTable};
use crate::trace::{select_users, traffic_sources, SelectionMode, Trace, TraceError};
use crate::{NodeId, SECONDS_PER_DAY};

/// A message: one source, one destination, created when the source first
/// appears inside the simulation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bundle {
    pub id: u32,
    pub source: NodeId,
    pub destination: NodeId,
    pub created_at: u64,
}

/// Final state of one bundle after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleOutcome {
    pub bundle: u32,
    pub source: NodeId,
    pub destination: NodeId,
    pub created_at: u64,
    pub delivered_at: Option<u64>,
    /// Hop count of the delivering copy.
    pub hops: Option<u32>,
    /// Custody path of the delivering copy (epidemic) or of the single
    /// copy (everything else). Starts at the source.
    pub path: Vec<NodeId>,
}

impl BundleOutcome {
    pub fn delivered(&self) -> bool {
        self.delivered_at.is_some()
    }

    pub fn delay(&self) -> Option<u64> {
        self.delivered_at.map(|t| t - self.created_at)
    }
}

/// Everything one simulation run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub policy: Policy,
    /// One outcome per bundle, in bundle-id order.
    pub outcomes: Vec<BundleOutcome>,
    /// Total forwards, replications included.
    pub transmissions: u64,
    /// Decisions taken without a destination pattern.
    pub blind_decisions: u64,
}

/// Simulation parameters; the defaults mirror the standard scenario
/// (300 sampled users, 100 sources, 5 connections of 1 bundle, 1 s step,
/// the whole trace span).
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub sampled_users: usize,
    pub traffic_sources: usize,
    pub connections_per_source: u32,
    pub bundles_per_connection: u32,
    pub time_step: u64,
    /// Simulated seconds from the start of the trace span; `None` runs to
    /// the end of the span.
    pub duration: Option<u64>,
    /// Window over which routing patterns are computed; `None` means the
    /// full trace span.
    pub pattern_window: Option<(u64, u64)>,
    /// Keep only the `l` principal pattern components.
    pub truncation: Option<u32>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            sampled_users: 300,
            traffic_sources: 100,
            connections_per_source: 5,
            bundles_per_connection: 1,
            time_step: 1,
            duration: None,
            pattern_window: None,
            truncation: None,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: &str| Err(EngineError::InvalidSpec(msg.into()));
        if self.sampled_users == 0 || self.traffic_sources == 0 {
            return bad("sampled_users and traffic_sources must be >= 1");
        }
        if self.traffic_sources > self.sampled_users {
            return bad("traffic_sources cannot exceed sampled_users");
        }
        if self.connections_per_source == 0 || self.bundles_per_connection == 0 {
            return bad("connections_per_source and bundles_per_connection must be >= 1");
        }
        if self.time_step == 0 {
            return bad("time_step must be >= 1");
        }
        if self.duration == Some(0) {
            return bad("duration must be positive");
        }
        if let Some((t0, t1)) = self.pattern_window {
            if t0 >= t1 {
                return bad("pattern window must be a non-empty half-open interval");
            }
        }
        Ok(())
    }

    /// Simulation window `[start, horizon)` on a given trace.
    pub fn window(&self, trace: &Trace) -> Result<(u64, u64), EngineError> {
        let (t0, t1) = trace.span();
        match self.duration {
            None => Ok((t0, t1)),
            Some(d) if d <= t1 - t0 => Ok((t0, t0 + d)),
            Some(d) => Err(EngineError::InvalidSpec(format!(
                "duration {} s exceeds the trace span of {} s",
                d,
                t1 - t0
            ))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("source {node} has only {got} destination candidates, {needed} needed")]
    TooFewDestinations { node: NodeId, needed: usize, got: usize },
    #[error("bundle {bundle} created at {created_at}, at or past the horizon {horizon}")]
    BundleAfterHorizon { bundle: u32, created_at: u64, horizon: u64 },
    #[error("node {0} is not part of the simulated subset")]
    NodeOutsideSubset(NodeId),
    #[error("policy {0} requires a precomputed pattern table")]
    MissingPatterns(Policy),
    #[error("experiments need at least 2 runs for confidence intervals, got {0}")]
    TooFewRuns(u32),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
}

/// Draw the traffic matrix: for every source, `connections_per_source`
/// distinct destinations from the sampled set (never the source itself),
/// `bundles_per_connection` bundles each. Creation time is the source's
/// first session start inside the simulation window.
pub fn generate_workload(
    trace: &Trace,
    sources: &[NodeId],
    sampled: &[NodeId],
    params: &SimParams,
    seed: u64,
) -> Result<Vec<Bundle>, EngineError> {
    let (start, horizon) = params.window(trace)?;
    let connections = params.connections_per_source as usize;
    let mut bundles = Vec::with_capacity(sources.len() * connections);
    let mut id = 0u32;
    for &source in sources {
        let pool: Vec<NodeId> = sampled.iter().copied().filter(|&n| n != source).collect();
        if pool.len() < connections {
            return Err(EngineError::TooFewDestinations {
                node: source,
                needed: connections,
                got: pool.len(),
            });
        }
        let created_at = trace
            .node_sessions(source)
            .map(|s| s.start)
            .find(|&t| t >= start && t < horizon)
            .ok_or(EngineError::BundleAfterHorizon { bundle: id, created_at: horizon, horizon })?;
        let mut rng = crate::rng::stream(seed, u64::from(source), "workload");
        let destinations: Vec<NodeId> = rand::seq::index::sample(&mut rng, pool.len(), connections)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        for destination in destinations {
            for _ in 0..params.bundles_per_connection {
                bundles.push(Bundle { id, source, destination, created_at });
                id += 1;
            }
        }
    }
    Ok(bundles)
}

/// Prebuilt immutable inputs shared by several simulations of one run.
#[derive(Clone, Copy)]
pub struct SharedInputs<'a> {
    pub index: &'a OccupancyIndex,
    pub patterns: Option<&'a PatternTable>,
    pub preferences: Option<&'a PreferenceTable>,
}

/// Simulate one policy over one workload, building the contact index and
/// pattern/preference tables internally.
pub fn run_simulation(
    trace: &Trace,
    subset: &[NodeId],
    bundles: &[Bundle],
    policy: Policy,
    params: &SimParams,
    seed: u64,
) -> Result<RunResult, EngineError> {
    params.validate()?;
    let index = build_index(trace, subset, params.time_step)?;
    let patterns = if policy.needs_patterns() {
        Some(pattern_table(trace, subset, params)?)
    } else {
        None
    };
    let preferences = policy.needs_preferences().then(|| {
        PreferenceTable::generate(subset, bundles.iter().map(|b| b.destination), seed)
    });
    let window = params.window(trace)?;
    sim::simulate(
        SharedInputs {
            index: &index,
            patterns: patterns.as_ref(),
            preferences: preferences.as_ref(),
        },
        bundles,
        policy,
        window,
        params.time_step,
        seed,
    )
}

/// Simulate one policy against prebuilt inputs (the experiment driver
/// shares the index and tables across policies of one run).
pub fn run_simulation_with(
    inputs: SharedInputs<'_>,
    bundles: &[Bundle],
    policy: Policy,
    window: (u64, u64),
    time_step: u64,
    seed: u64,
) -> Result<RunResult, EngineError> {
    sim::simulate(inputs, bundles, policy, window, time_step, seed)
}

fn pattern_table(trace: &Trace, subset: &[NodeId], params: &SimParams) -> Result<PatternTable, EngineError> {
    let window = match params.pattern_window {
        Some((t0, t1)) => PatternWindow::new(t0, t1)?,
        None => PatternWindow::full_span(trace)?,
    };
    Ok(PatternTable::compute(trace, subset, window, params.truncation))
}

/// What population each scenario of an experiment samples, and how
/// patterns are reduced.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    /// Uniformly sampled users.
    Standard,
    /// Users active on every day of the span.
    MostActive,
    /// One scenario per relative-entropy bin over uniformly eligible users.
    EntropyBins(Vec<(f64, f64)>),
    /// Pattern-space reduction over the most active users: one scenario
    /// per component count, plus the full space.
    Reduction(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub params: SimParams,
    pub policies: Vec<Policy>,
    pub runs: u32,
    pub seed: u64,
    pub kind: ExperimentKind,
    /// Bins of the per-policy delivery CDF series.
    pub cdf_bins: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            params: SimParams::default(),
            policies: Policy::ALL.to_vec(),
            runs: 5,
            seed: 1,
            kind: ExperimentKind::Standard,
            cdf_bins: 100,
        }
    }
}

/// One sampled population under one pattern treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub selection: SelectionMode,
    pub truncation: Option<u32>,
}

impl ExperimentSpec {
    pub fn scenarios(&self) -> Vec<Scenario> {
        match &self.kind {
            ExperimentKind::Standard => vec![Scenario {
                label: "standard".into(),
                selection: SelectionMode::UniformRandom,
                truncation: self.params.truncation,
            }],
            ExperimentKind::MostActive => vec![Scenario {
                label: "most-active".into(),
                selection: SelectionMode::MostActive,
                truncation: self.params.truncation,
            }],
            ExperimentKind::EntropyBins(bins) => bins
                .iter()
                .map(|&(lo, hi)| Scenario {
                    label: format!("entropy-{lo:.2}-{hi:.2}"),
                    selection: SelectionMode::EntropyBin { lo, hi },
                    truncation: self.params.truncation,
                })
                .collect(),
            ExperimentKind::Reduction(levels) => {
                let mut scenarios: Vec<Scenario> = levels
                    .iter()
                    .map(|&l| Scenario {
                        label: format!("l-{l}"),
                        selection: SelectionMode::MostActive,
                        truncation: Some(l),
                    })
                    .collect();
                scenarios.push(Scenario {
                    label: "l-full".into(),
                    selection: SelectionMode::MostActive,
                    truncation: None,
                });
                scenarios
            }
        }
    }

    /// Reduction scenarios compare pattern treatments, so they run the
    /// pattern-based policy alone.
    pub fn effective_policies(&self) -> Vec<Policy> {
        match self.kind {
            ExperimentKind::Reduction(_) => vec![Policy::MobySpace],
            _ => self.policies.clone(),
        }
    }
}

/// Results of one policy across the runs of one scenario.
#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub policy: Policy,
    pub results: Vec<RunResult>,
    pub per_run: Vec<RunSummary>,
    pub aggregate: PolicyAggregate,
    pub cdf: Vec<CdfPoint>,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub policies: Vec<PolicyOutcome>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub scenarios: Vec<ScenarioResult>,
    pub horizon: u64,
}

struct RunArtifacts {
    bundles: Vec<Bundle>,
    index: OccupancyIndex,
    patterns: Option<PatternTable>,
    preferences: Option<PreferenceTable>,
}

/// Run every scenario × run × policy combination. Policies of one run are
/// paired: same sample, same workload. Deterministic in `(trace, spec)`.
pub fn run_experiment(trace: &Trace, spec: &ExperimentSpec) -> Result<ExperimentOutput, EngineError> {
    spec.params.validate()?;
    if spec.runs < 2 {
        return Err(EngineError::TooFewRuns(spec.runs));
    }
    let policies = spec.effective_policies();
    if policies.is_empty() {
        return Err(EngineError::InvalidSpec("no policies requested".into()));
    }
    let scenarios = spec.scenarios();
    let window = spec.params.window(trace)?;

    let need_patterns = policies.iter().any(|p| p.needs_patterns());
    let need_preferences = policies.iter().any(|p| p.needs_preferences());

    // phase 1: per (scenario, run) build the sample, workload and tables
    let setups: Vec<(usize, u32)> = (0..scenarios.len())
        .flat_map(|s| (0..spec.runs).map(move |r| (s, r)))
        .collect();
    let artifacts: Vec<Result<Arc<RunArtifacts>, EngineError>> = par_map(setups.clone(), |(s, run)| {
        let scenario = &scenarios[s];
        let sampled = select_users(
            trace,
            scenario.selection,
            spec.params.sampled_users,
            crate::rng::sub_seed(spec.seed, u64::from(run), "sampling"),
        )?;
        let sources = traffic_sources(
            trace,
            &sampled,
            spec.params.traffic_sources,
            crate::rng::sub_seed(spec.seed, u64::from(run), "sources"),
        )?;
        let workload_seed = crate::rng::sub_seed(spec.seed, u64::from(run), "workload");
        let bundles = generate_workload(trace, &sources, &sampled, &spec.params, workload_seed)?;
        let index = build_index(trace, &sampled, spec.params.time_step)?;
        let patterns = if need_patterns {
            let mut params = spec.params.clone();
            params.truncation = scenario.truncation;
            Some(pattern_table(trace, &sampled, &params)?)
        } else {
            None
        };
        let preferences = need_preferences.then(|| {
            PreferenceTable::generate(
                &sampled,
                bundles.iter().map(|b| b.destination),
                crate::rng::sub_seed(spec.seed, u64::from(run), "run"),
            )
        });
        Ok(Arc::new(RunArtifacts { bundles, index, patterns, preferences }))
    });
    let artifacts: Vec<Arc<RunArtifacts>> = artifacts.into_iter().collect::<Result<_, _>>()?;

    // phase 2: simulate every (scenario, run, policy)
    let tasks: Vec<(usize, usize)> = (0..setups.len())
        .flat_map(|i| (0..policies.len()).map(move |p| (i, p)))
        .collect();
    let results: Vec<Result<RunResult, EngineError>> = par_map(tasks, |(i, p)| {
        let (_, run) = setups[i];
        let a = &artifacts[i];
        run_simulation_with(
            SharedInputs {
                index: &a.index,
                patterns: a.patterns.as_ref(),
                preferences: a.preferences.as_ref(),
            },
            &a.bundles,
            policies[p],
            window,
            spec.params.time_step,
            crate::rng::sub_seed(spec.seed, u64::from(run), "run"),
        )
    });
    let mut results: std::collections::VecDeque<RunResult> =
        results.into_iter().collect::<Result<_, _>>()?;

    // fold back into scenario -> policy -> runs
    let mut scenario_results = Vec::with_capacity(scenarios.len());
    for scenario in scenarios {
        let mut per_policy: Vec<Vec<RunResult>> = vec![Vec::new(); policies.len()];
        for _run in 0..spec.runs {
            for slot in per_policy.iter_mut() {
                slot.push(results.pop_front().expect("one result per task"));
            }
        }
        let mut outcomes = Vec::with_capacity(policies.len());
        for (p, runs) in policies.iter().zip(per_policy) {
            let per_run: Vec<RunSummary> =
                runs.iter().map(metrics::summarize_run).collect::<Result<_, _>>()?;
            let aggregate = metrics::aggregate_runs(&per_run, 0.90)?;
            let cdfs: Vec<Vec<CdfPoint>> =
                runs.iter().map(|r| metrics::delivery_cdf(r, window.1, spec.cdf_bins)).collect();
            outcomes.push(PolicyOutcome {
                policy: *p,
                results: runs,
                per_run,
                aggregate,
                cdf: metrics::mean_cdf(&cdfs),
            });
        }
        scenario_results.push(ScenarioResult { scenario, policies: outcomes });
    }

    Ok(ExperimentOutput { scenarios: scenario_results, horizon: window.1 })
}

#[cfg(feature = "parallel")]
fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
