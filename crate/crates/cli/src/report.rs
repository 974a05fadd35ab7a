//! Table rendering for results directories.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use mobysim_core::engine::{ExperimentOutput, LearningPoint};

pub struct Row {
    pub scenario: String,
    pub policy: String,
    /// (mean, half-width) per metric, in results.csv order.
    pub metrics: [Option<(f64, f64)>; 3],
}

const METRICS: [&str; 3] = ["delivery_ratio_pct", "delay_days", "route_length_hops"];
const HEADERS: [&str; 3] = ["delivery ratio (%)", "delay (days)", "route length (hops)"];

pub fn render(dir: &Path) -> Result<()> {
    let results = dir.join("results.csv");
    let learning = dir.join("learning.csv");
    let mut rendered = false;
    if results.is_file() {
        print_results(&parse_results(&fs::read_to_string(&results)?)?);
        rendered = true;
    }
    if learning.is_file() {
        print_learning(&parse_learning(&fs::read_to_string(&learning)?)?);
        rendered = true;
    }
    if !rendered {
        bail!("no results.csv or learning.csv under {}", dir.display());
    }
    Ok(())
}

pub fn results_rows(output: &ExperimentOutput) -> Vec<Row> {
    let mut rows = Vec::new();
    for scenario in &output.scenarios {
        for outcome in &scenario.policies {
            let ci = |c: Option<mobysim_core::metrics::Ci>| c.map(|c| (c.mean, c.half_width));
            rows.push(Row {
                scenario: scenario.scenario.label.clone(),
                policy: outcome.policy.to_string(),
                metrics: [
                    ci(Some(outcome.aggregate.delivery_ratio)),
                    ci(outcome.aggregate.delay_days),
                    ci(outcome.aggregate.hops),
                ],
            });
        }
    }
    rows
}

fn parse_results(text: &str) -> Result<Vec<Row>> {
    let mut rows: Vec<Row> = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            bail!("malformed results row: `{line}`");
        }
        let (scenario, policy, metric) = (fields[0], fields[1], fields[2]);
        let slot = METRICS
            .iter()
            .position(|m| *m == metric)
            .with_context(|| format!("unknown metric `{metric}`"))?;
        let value = if fields[3].is_empty() {
            None
        } else {
            Some((fields[3].parse::<f64>()?, fields[4].parse::<f64>()?))
        };
        match rows.iter_mut().find(|r| r.scenario == scenario && r.policy == policy) {
            Some(row) => row.metrics[slot] = value,
            None => {
                let mut metrics = [None; 3];
                metrics[slot] = value;
                rows.push(Row { scenario: scenario.into(), policy: policy.into(), metrics });
            }
        }
    }
    Ok(rows)
}

fn parse_learning(text: &str) -> Result<Vec<LearningPoint>> {
    let mut points = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            bail!("malformed learning row: `{line}`");
        }
        points.push(LearningPoint {
            days: fields[0].parse()?,
            mean_error_all: fields[1].parse()?,
            mean_error_most_active: fields[2].parse()?,
            nodes_all: fields[3].parse()?,
            nodes_most_active: fields[4].parse()?,
        });
    }
    Ok(points)
}

pub fn print_results(rows: &[Row]) {
    let mut scenarios: Vec<&str> = Vec::new();
    for row in rows {
        if !scenarios.contains(&row.scenario.as_str()) {
            scenarios.push(&row.scenario);
        }
    }
    for scenario in scenarios {
        println!();
        println!("scenario: {scenario}");
        println!(
            "  {:<14} {:>20} {:>18} {:>22}",
            "policy", HEADERS[0], HEADERS[1], HEADERS[2]
        );
        for row in rows.iter().filter(|r| r.scenario == scenario) {
            let cell = |m: Option<(f64, f64)>| match m {
                Some((mean, hw)) => format!("{mean:.1} \u{b1} {hw:.1}"),
                None => "-".to_string(),
            };
            println!(
                "  {:<14} {:>20} {:>18} {:>22}",
                row.policy,
                cell(row.metrics[0]),
                cell(row.metrics[1]),
                cell(row.metrics[2])
            );
        }
    }
}

pub fn print_learning(points: &[LearningPoint]) {
    println!();
    println!("pattern learning error");
    println!("  {:<14} {:>16} {:>18}", "learning days", "all nodes", "most active");
    for p in points {
        println!(
            "  {:<14} {:>16.4} {:>18.4}",
            p.days, p.mean_error_all, p.mean_error_most_active
        );
    }
}
