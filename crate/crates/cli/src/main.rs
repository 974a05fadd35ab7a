//! Batch front end: trace generation, trace statistics, single simulation
//! passes, multi-run experiments, and report rendering.

mod report;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mobysim_core::config::{load_config, LoadedExperiment};
use mobysim_core::engine::{
    generate_workload, learning_experiment, run_experiment, run_simulation, ExperimentSpec,
};
use mobysim_core::metrics::{
    summarize_run, write_cdf_csv, write_learning_csv, write_results_csv, write_runs_csv,
};
use mobysim_core::routing::Policy;
use mobysim_core::trace::{
    generate_synthetic, parse_sessions, select_users, trace_statistics, traffic_sources,
    write_day_stats_csv, write_node_stats_csv, write_sessions, SyntheticConfig, Trace,
};
use mobysim_core::SECONDS_PER_DAY;

#[derive(Parser)]
#[command(name = "mobysim", version, about = "Trace-driven DTN routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic session trace
    Generate(GenerateArgs),
    /// Compute per-node and per-day statistics of a session trace
    Stats(StatsArgs),
    /// Run one simulation pass and dump per-bundle outcomes
    Simulate(SimulateArgs),
    /// Run a multi-run experiment with confidence intervals
    Experiment(ExperimentArgs),
    /// Render a results directory as tables
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of nodes
    #[arg(long, default_value_t = 200)]
    nodes: u32,
    /// Number of locations
    #[arg(long, default_value_t = 50)]
    locations: u32,
    /// Trace length in days
    #[arg(long, default_value_t = 45)]
    days: u64,
    /// Exponent of the per-node location-preference power law
    #[arg(long, default_value_t = 2.0)]
    zipf: f64,
    /// Mean session duration in seconds
    #[arg(long, default_value_t = 14400.0)]
    mean_session: f64,
    /// Mean arrivals per node per day
    #[arg(long, default_value_t = 4.0)]
    sessions_per_day: f64,
    /// Restrict arrivals to a day/night cycle
    #[arg(long)]
    diurnal: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output session CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Session CSV to analyze
    #[arg(long)]
    trace: PathBuf,
    /// Directory for nodes.csv and days.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Session CSV to replay
    #[arg(long)]
    trace: PathBuf,
    /// Experiment config file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's policy list (repeatable)
    #[arg(long = "policy")]
    policies: Vec<Policy>,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for concurrent simulations
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Session CSV to replay
    #[arg(long)]
    trace: PathBuf,
    /// Experiment config file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for concurrent simulations
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding results.csv and/or learning.csv
    #[arg(long)]
    results: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mobysim: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Stats(args) => stats(args),
        Command::Simulate(args) => simulate(args),
        Command::Experiment(args) => experiment(args),
        Command::Report(args) => report::render(&args.results),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        node_count: args.nodes,
        location_count: args.locations,
        duration: args.days * SECONDS_PER_DAY,
        zipf_exponent: args.zipf,
        mean_session_duration: args.mean_session,
        sessions_per_day: args.sessions_per_day,
        diurnal: args.diurnal,
        seed: args.seed,
    };
    let trace = generate_synthetic(&cfg)?;
    let mut out = BufWriter::new(
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?,
    );
    write_sessions(&trace, &mut out)?;
    out.flush()?;
    println!(
        "wrote {} sessions for {} nodes over {} locations to {}",
        trace.sessions().len(),
        trace.node_count(),
        trace.location_count(),
        args.out.display()
    );
    Ok(())
}

fn load_trace(path: &Path) -> Result<Trace> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let outcome = parse_sessions(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))?;
    if outcome.normalized > 0 || outcome.rejected > 0 {
        eprintln!(
            "note: {} overlapping sessions normalized, {} invalid lines dropped",
            outcome.normalized, outcome.rejected
        );
    }
    Ok(outcome.trace)
}

fn stats(args: StatsArgs) -> Result<()> {
    let trace = load_trace(&args.trace)?;
    let stats = trace_statistics(&trace);
    fs::create_dir_all(&args.out)?;
    write_node_stats_csv(&stats, BufWriter::new(File::create(args.out.join("nodes.csv"))?))?;
    write_day_stats_csv(&stats, BufWriter::new(File::create(args.out.join("days.csv"))?))?;

    let (t0, t1) = trace.span();
    let mean_locations = stats.per_node.iter().map(|n| f64::from(n.locations_visited)).sum::<f64>()
        / stats.per_node.len().max(1) as f64;
    let mean_days = stats.per_node.iter().map(|n| f64::from(n.active_days)).sum::<f64>()
        / stats.per_node.len().max(1) as f64;
    let mean_connection_h = stats.per_node.iter().map(|n| n.connection_time as f64).sum::<f64>()
        / stats.per_node.len().max(1) as f64
        / 3600.0;
    println!("nodes: {}", trace.node_count());
    println!("locations: {}", trace.location_count());
    println!("sessions: {}", trace.sessions().len());
    println!("span_days: {:.2}", (t1 - t0) as f64 / SECONDS_PER_DAY as f64);
    println!("mean_locations_per_node: {mean_locations:.2}");
    println!("mean_active_days: {mean_days:.2}");
    println!("mean_connection_hours: {mean_connection_h:.2}");
    println!("wrote {}/nodes.csv and {}/days.csv", args.out.display(), args.out.display());
    Ok(())
}

fn load_spec(config: Option<&Path>) -> Result<LoadedExperiment> {
    match config {
        Some(path) => Ok(load_config(path).with_context(|| format!("loading {}", path.display()))?),
        None => Ok(LoadedExperiment::Runs(ExperimentSpec::default())),
    }
}

fn with_jobs<T>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match jobs {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .context("building worker pool")?;
            pool.install(f)
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let trace = load_trace(&args.trace)?;
    let LoadedExperiment::Runs(mut spec) = load_spec(args.config.as_deref())? else {
        bail!("`simulate` runs simulation passes; use `experiment` for a learning config");
    };
    if !args.policies.is_empty() {
        spec.policies = args.policies.clone();
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let scenarios = spec.scenarios();
    if scenarios.len() != 1 {
        bail!("`simulate` handles standard and most-active configs; use `experiment` for grids");
    }
    let scenario = &scenarios[0];

    let sampling_seed = mobysim_core::rng::sub_seed(spec.seed, 0, "sampling");
    let sampled = select_users(&trace, scenario.selection, spec.params.sampled_users, sampling_seed)?;
    let sources_seed = mobysim_core::rng::sub_seed(spec.seed, 0, "sources");
    let sources = traffic_sources(&trace, &sampled, spec.params.traffic_sources, sources_seed)?;
    let workload_seed = mobysim_core::rng::sub_seed(spec.seed, 0, "workload");
    let bundles = generate_workload(&trace, &sources, &sampled, &spec.params, workload_seed)?;
    let run_seed = mobysim_core::rng::sub_seed(spec.seed, 0, "run");

    fs::create_dir_all(&args.out)?;
    let results = with_jobs(args.jobs, || {
        spec.policies
            .iter()
            .map(|&policy| {
                run_simulation(&trace, &sampled, &bundles, policy, &spec.params, run_seed)
                    .map_err(anyhow::Error::from)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut summary = BufWriter::new(File::create(args.out.join("summary.csv"))?);
    writeln!(summary, "policy,created,delivered,delivery_ratio_pct,mean_delay_days,mean_hops")?;
    for result in results {
        let s = summarize_run(&result)?;
        let delay = s.mean_delay_days.map(|v| format!("{v:.6}")).unwrap_or_default();
        let hops = s.mean_hops.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(
            summary,
            "{},{},{},{:.6},{},{}",
            result.policy, s.created, s.delivered, s.delivery_ratio, delay, hops
        )?;
        println!(
            "{}: {}/{} delivered ({:.1}%)",
            result.policy, s.delivered, s.created, s.delivery_ratio
        );

        let name = format!("bundles_{}.csv", result.policy);
        let mut w = BufWriter::new(File::create(args.out.join(name))?);
        writeln!(w, "bundle,source,destination,created_at,delivered,delay_seconds,hops")?;
        for o in &result.outcomes {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                o.bundle,
                o.source,
                o.destination,
                o.created_at,
                u8::from(o.delivered()),
                o.delay().map(|d| d.to_string()).unwrap_or_default(),
                o.hops.map(|h| h.to_string()).unwrap_or_default()
            )?;
        }
        w.flush()?;
    }
    summary.flush()?;
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let trace = load_trace(&args.trace)?;
    let loaded = load_spec(args.config.as_deref())?;
    fs::create_dir_all(&args.out)?;
    match loaded {
        LoadedExperiment::Runs(mut spec) => {
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            let output = with_jobs(args.jobs, || {
                run_experiment(&trace, &spec).map_err(anyhow::Error::from)
            })?;
            let mut results = BufWriter::new(File::create(args.out.join("results.csv"))?);
            write_results_csv(&output, &mut results)?;
            results.flush()?;
            let mut runs = BufWriter::new(File::create(args.out.join("runs.csv"))?);
            write_runs_csv(&output, &mut runs)?;
            runs.flush()?;
            for scenario in &output.scenarios {
                let name = format!("cdf_{}.csv", scenario.scenario.label);
                let mut w = BufWriter::new(File::create(args.out.join(name))?);
                write_cdf_csv(scenario, &mut w)?;
                w.flush()?;
            }
            println!("wrote results.csv, runs.csv and per-scenario CDFs to {}", args.out.display());
            report::print_results(&report::results_rows(&output));
        }
        LoadedExperiment::Learning { learning_days, routing_days } => {
            let points = learning_experiment(&trace, learning_days, routing_days)?;
            let mut w = BufWriter::new(File::create(args.out.join("learning.csv"))?);
            write_learning_csv(&points, &mut w)?;
            w.flush()?;
            println!("wrote learning.csv to {}", args.out.display());
            report::print_learning(&points);
        }
    }
    Ok(())
}
