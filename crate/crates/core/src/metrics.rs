//! Transport-layer metrics: delivery ratio, delay, route length, delivery
//! CDFs, and Student-t confidence intervals over repeated runs.

use std::io::Write;

use crate::engine::{ExperimentOutput, LearningPoint, RunResult, ScenarioResult};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("run contains no bundles")]
    NoBundles,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("confidence level must lie in (0, 1), got {0}")]
    BadLevel(f64),
}

/// Per-run transport summary. Delay and route length are averaged over
/// delivered bundles only and absent when nothing was delivered.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub created: u32,
    pub delivered: u32,
    /// Percentage in `[0, 100]`.
    pub delivery_ratio: f64,
    pub mean_delay_days: Option<f64>,
    pub mean_hops: Option<f64>,
}

/// Reduce one run to `(ratio %, mean delay days, mean hops)`.
pub fn summarize_run(result: &RunResult) -> Result<RunSummary, MetricsError> {
    let created = result.outcomes.len() as u32;
    if created == 0 {
        return Err(MetricsError::NoBundles);
    }
    let delivered: Vec<_> = result.outcomes.iter().filter(|o| o.delivered()).collect();
    let count = delivered.len() as u32;
    let (mean_delay_days, mean_hops) = if count > 0 {
        let delay: f64 = delivered.iter().map(|o| o.delay().unwrap() as f64).sum::<f64>() / count as f64;
        let hops: f64 = delivered.iter().map(|o| f64::from(o.hops.unwrap())).sum::<f64>() / count as f64;
        (Some(delay / crate::SECONDS_PER_DAY as f64), Some(hops))
    } else {
        (None, None)
    };
    Ok(RunSummary {
        created,
        delivered: count,
        delivery_ratio: 100.0 * f64::from(count) / f64::from(created),
        mean_delay_days,
        mean_hops,
    })
}

/// Mean with a two-sided confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ci {
    pub mean: f64,
    pub half_width: f64,
}

/// Student-t interval: `mean ± t_{(1+level)/2, k-1} * s / sqrt(k)` with the
/// sample standard deviation `s` (k−1 denominator).
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<Ci, MetricsError> {
    let k = samples.len();
    if k < 2 {
        return Err(MetricsError::TooFewSamples(k));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(MetricsError::BadLevel(level));
    }
    let mean = samples.iter().sum::<f64>() / k as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    let t = student_t_quantile((1.0 + level) / 2.0, (k - 1) as f64);
    Ok(Ci { mean, half_width: t * var.sqrt() / (k as f64).sqrt() })
}

/// Inverse CDF of Student's t distribution, computed through the inverse
/// regularized incomplete beta function rather than a hard-coded table.
pub fn student_t_quantile(p: f64, dof: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range");
    assert!(dof > 0.0, "degrees of freedom must be positive");
    if p == 0.5 {
        return 0.0;
    }
    let x = statrs::function::beta::inv_beta_reg(0.5 * dof, 0.5, 2.0 * p.min(1.0 - p));
    let magnitude = (dof * (1.0 - x) / x).sqrt();
    if p > 0.5 {
        magnitude
    } else {
        -magnitude
    }
}

/// One point of a delivery CDF: the fraction of created bundles delivered
/// by absolute time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPoint {
    pub t: u64,
    pub fraction: f64,
}

/// Cumulative fraction of created bundles delivered over `bins` equal
/// slices of `[0, horizon]`. Non-decreasing; the final value equals the
/// delivery ratio / 100.
pub fn delivery_cdf(result: &RunResult, horizon: u64, bins: usize) -> Vec<CdfPoint> {
    assert!(bins >= 1, "need at least one bin");
    let created = result.outcomes.len().max(1) as f64;
    let mut delivered_times: Vec<u64> =
        result.outcomes.iter().filter_map(|o| o.delivered_at).collect();
    delivered_times.sort_unstable();
    (1..=bins)
        .map(|j| {
            let t = horizon * j as u64 / bins as u64;
            let count = delivered_times.partition_point(|&d| d <= t);
            CdfPoint { t, fraction: count as f64 / created }
        })
        .collect()
}

/// Per-policy aggregate over repeated runs. Delay and hops need at least
/// two runs that each delivered something; otherwise they stay absent.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyAggregate {
    pub delivery_ratio: Ci,
    pub delay_days: Option<Ci>,
    pub hops: Option<Ci>,
}

pub fn aggregate_runs(summaries: &[RunSummary], level: f64) -> Result<PolicyAggregate, MetricsError> {
    let ratios: Vec<f64> = summaries.iter().map(|s| s.delivery_ratio).collect();
    let delivery_ratio = confidence_interval(&ratios, level)?;
    let delays: Vec<f64> = summaries.iter().filter_map(|s| s.mean_delay_days).collect();
    let hops: Vec<f64> = summaries.iter().filter_map(|s| s.mean_hops).collect();
    let delay_days = confidence_interval(&delays, level).ok();
    let hops = confidence_interval(&hops, level).ok();
    Ok(PolicyAggregate { delivery_ratio, delay_days, hops })
}

/// One row per (scenario, policy, metric): `mean` and `half_width` stay
/// empty when fewer than two runs delivered anything.
pub fn write_results_csv(output: &ExperimentOutput, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "scenario,policy,metric,mean,half_width")?;
    for scenario in &output.scenarios {
        for outcome in &scenario.policies {
            let rows = [
                ("delivery_ratio_pct", Some(outcome.aggregate.delivery_ratio)),
                ("delay_days", outcome.aggregate.delay_days),
                ("route_length_hops", outcome.aggregate.hops),
            ];
            for (metric, ci) in rows {
                match ci {
                    Some(ci) => writeln!(
                        w,
                        "{},{},{},{:.6},{:.6}",
                        scenario.scenario.label, outcome.policy, metric, ci.mean, ci.half_width
                    )?,
                    None => writeln!(w, "{},{},{},,", scenario.scenario.label, outcome.policy, metric)?,
                }
            }
        }
    }
    Ok(())
}

/// One row per (scenario, policy, run) with the raw per-run summary.
pub fn write_runs_csv(output: &ExperimentOutput, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "scenario,policy,run,created,delivered,delivery_ratio_pct,mean_delay_days,mean_hops")?;
    for scenario in &output.scenarios {
        for outcome in &scenario.policies {
            for (run, s) in outcome.per_run.iter().enumerate() {
                let delay = s.mean_delay_days.map(|v| format!("{v:.6}")).unwrap_or_default();
                let hops = s.mean_hops.map(|v| format!("{v:.6}")).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{:.6},{},{}",
                    scenario.scenario.label,
                    outcome.policy,
                    run,
                    s.created,
                    s.delivered,
                    s.delivery_ratio,
                    delay,
                    hops
                )?;
            }
        }
    }
    Ok(())
}

/// Plot-ready delivery CDF rows `policy,t_seconds,fraction` for one
/// scenario.
pub fn write_cdf_csv(scenario: &ScenarioResult, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "policy,t_seconds,fraction")?;
    for outcome in &scenario.policies {
        for p in &outcome.cdf {
            writeln!(w, "{},{},{:.6}", outcome.policy, p.t, p.fraction)?;
        }
    }
    Ok(())
}

/// Learning-error series rows, one per learning-day count.
pub fn write_learning_csv(points: &[LearningPoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "learning_days,mean_error_all,mean_error_most_active,nodes_all,nodes_most_active")?;
    for p in points {
        writeln!(
            w,
            "{},{:.6},{:.6},{},{}",
            p.days, p.mean_error_all, p.mean_error_most_active, p.nodes_all, p.nodes_most_active
        )?;
    }
    Ok(())
}

/// Pointwise mean of per-run CDFs sharing one bin grid.
pub fn mean_cdf(cdfs: &[Vec<CdfPoint>]) -> Vec<CdfPoint> {
    let Some(first) = cdfs.first() else { return Vec::new() };
    let mut out = first.clone();
    for cdf in &cdfs[1..] {
        assert_eq!(cdf.len(), out.len(), "cdf grids must match");
        for (acc, p) in out.iter_mut().zip(cdf) {
            debug_assert_eq!(acc.t, p.t);
            acc.fraction += p.fraction;
        }
    }
    let n = cdfs.len() as f64;
    for p in &mut out {
        p.fraction /= n;
    }
    out
}
