//! Flat `key = value` experiment configuration files.
//!
//! Unspecified keys fall back to the standard scenario defaults (300
//! sampled users, 100 traffic sources, 5 connections per source, 1 bundle
//! per connection, 1 s time step, the whole trace span, 5 runs, all policies). Unknown
//! keys are errors, not warnings.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::engine::{ExperimentKind, ExperimentSpec};
use crate::routing::Policy;
use crate::SECONDS_PER_DAY;

/// Default entropy bins, matching the four studied pattern-homogeneity
/// classes.
pub const DEFAULT_ENTROPY_BINS: [(f64, f64); 4] =
    [(0.0, 0.1), (0.1, 0.2), (0.2, 0.3), (0.3, 0.4)];

/// Default component counts for the space-reduction experiment.
pub const DEFAULT_REDUCTION_LEVELS: [u32; 3] = [1, 2, 3];

pub const DEFAULT_LEARNING_DAYS: u32 = 15;
pub const DEFAULT_ROUTING_DAYS: u32 = 30;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}`: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("line {line}: expected `key = value`")]
    BadSyntax { line: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A parsed experiment request.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedExperiment {
    /// Multi-run simulation experiment.
    Runs(ExperimentSpec),
    /// Pattern-learning error measurement.
    Learning { learning_days: u32, routing_days: u32 },
}

pub fn load_config(path: &Path) -> Result<LoadedExperiment, ConfigError> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn parse_config(text: &str) -> Result<LoadedExperiment, ConfigError> {
    let mut spec = ExperimentSpec::default();
    let mut experiment = String::from("standard");
    let mut entropy_bins: Vec<(f64, f64)> = DEFAULT_ENTROPY_BINS.to_vec();
    let mut levels: Vec<u32> = DEFAULT_REDUCTION_LEVELS.to_vec();
    let mut learning_days = DEFAULT_LEARNING_DAYS;
    let mut routing_days = DEFAULT_ROUTING_DAYS;
    let mut duration_days: Option<u64> = None;
    let mut duration_seconds: Option<u64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::BadSyntax { line });
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |msg: String| ConfigError::BadValue { line, key: key.into(), msg };

        match key {
            "experiment" => {
                let known = ["standard", "most-active", "entropy-bins", "reduction", "learning"];
                if !known.contains(&value) {
                    return Err(bad(format!("expected one of {}", known.join("|"))));
                }
                experiment = value.to_string();
            }
            "policies" => {
                spec.policies = value
                    .split(',')
                    .map(|s| Policy::from_str(s).map_err(|e| bad(e.to_string())))
                    .collect::<Result<_, _>>()?;
            }
            "runs" => spec.runs = parse_num(value).map_err(bad)?,
            "seed" => spec.seed = parse_num(value).map_err(bad)?,
            "sampled_users" => spec.params.sampled_users = parse_num(value).map_err(bad)?,
            "traffic_sources" => spec.params.traffic_sources = parse_num(value).map_err(bad)?,
            "connections_per_source" => {
                spec.params.connections_per_source = parse_num(value).map_err(bad)?
            }
            "bundles_per_connection" => {
                spec.params.bundles_per_connection = parse_num(value).map_err(bad)?
            }
            "time_step" => spec.params.time_step = parse_num(value).map_err(bad)?,
            "duration_days" => duration_days = Some(parse_num(value).map_err(bad)?),
            "duration_seconds" => duration_seconds = Some(parse_num(value).map_err(bad)?),
            "pattern_window" => {
                spec.params.pattern_window = if value == "full" {
                    None
                } else {
                    let (t0, t1) = value
                        .split_once(':')
                        .ok_or_else(|| bad("expected `full` or `start:end` seconds".into()))?;
                    Some((
                        parse_num(t0.trim()).map_err(&bad)?,
                        parse_num(t1.trim()).map_err(&bad)?,
                    ))
                }
            }
            "truncation" => spec.params.truncation = Some(parse_num(value).map_err(bad)?),
            "l" => {
                levels = value
                    .split(',')
                    .map(|s| parse_num(s.trim()).map_err(|m| bad(m)))
                    .collect::<Result<_, _>>()?;
            }
            "entropy_bins" => {
                entropy_bins = value
                    .split(',')
                    .map(|pair| {
                        let (lo, hi) = pair
                            .split_once(':')
                            .ok_or_else(|| bad(format!("`{pair}`: expected lo:hi")))?;
                        let lo: f64 = lo.trim().parse().map_err(|_| bad(format!("`{lo}` is not a number")))?;
                        let hi: f64 = hi.trim().parse().map_err(|_| bad(format!("`{hi}` is not a number")))?;
                        if !(lo < hi) {
                            return Err(bad(format!("empty bin {lo}:{hi}")));
                        }
                        Ok((lo, hi))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "learning_days" => learning_days = parse_num(value).map_err(bad)?,
            "routing_days" => routing_days = parse_num(value).map_err(bad)?,
            "cdf_bins" => spec.cdf_bins = parse_num(value).map_err(bad)?,
            other => return Err(ConfigError::UnknownKey { line, key: other.into() }),
        }
    }

    match (duration_days, duration_seconds) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "set either duration_days or duration_seconds, not both".into(),
            ))
        }
        (Some(days), None) => spec.params.duration = Some(days * SECONDS_PER_DAY),
        (None, Some(secs)) => spec.params.duration = Some(secs),
        (None, None) => {}
    }

    Ok(match experiment.as_str() {
        "standard" => {
            spec.kind = ExperimentKind::Standard;
            LoadedExperiment::Runs(spec)
        }
        "most-active" => {
            spec.kind = ExperimentKind::MostActive;
            LoadedExperiment::Runs(spec)
        }
        "entropy-bins" => {
            spec.kind = ExperimentKind::EntropyBins(entropy_bins);
            LoadedExperiment::Runs(spec)
        }
        "reduction" => {
            spec.kind = ExperimentKind::Reduction(levels);
            LoadedExperiment::Runs(spec)
        }
        "learning" => LoadedExperiment::Learning { learning_days, routing_days },
        _ => unreachable!("validated above"),
    })
}

fn parse_num<T: FromStr>(value: &str) -> Result<T, String> {
    value.parse::<T>().map_err(|_| format!("`{value}` is not a valid number"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SimParams;

    #[test]
    fn empty_file_gives_standard_defaults() {
        let LoadedExperiment::Runs(spec) = parse_config("").unwrap() else {
            panic!("expected a runs experiment")
        };
        assert_eq!(spec.params, SimParams::default());
        assert_eq!(spec.params.sampled_users, 300);
        assert_eq!(spec.params.traffic_sources, 100);
        assert_eq!(spec.params.connections_per_source, 5);
        assert_eq!(spec.params.bundles_per_connection, 1);
        assert_eq!(spec.params.time_step, 1);
        assert_eq!(spec.params.duration, None);
        assert_eq!(spec.runs, 5);
        assert_eq!(spec.policies, Policy::ALL.to_vec());
        assert_eq!(spec.kind, ExperimentKind::Standard);
    }

    #[test]
    fn two_policy_paired_experiment() {
        let LoadedExperiment::Runs(spec) =
            parse_config("policies = mobyspace,epidemic\n").unwrap()
        else {
            panic!()
        };
        assert_eq!(spec.policies, vec![Policy::MobySpace, Policy::Epidemic]);
    }

    #[test]
    fn reduction_runs_levels_plus_full() {
        let LoadedExperiment::Runs(spec) =
            parse_config("experiment = reduction\nl = 1,2,3\n").unwrap()
        else {
            panic!()
        };
        assert_eq!(spec.kind, ExperimentKind::Reduction(vec![1, 2, 3]));
        let labels: Vec<String> = spec.scenarios().iter().map(|s| s.label.clone()).collect();
        assert_eq!(labels, vec!["l-1", "l-2", "l-3", "l-full"]);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = parse_config("bandwidth = 11\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 1, .. }), "{err}");
    }

    #[test]
    fn type_mismatch_is_an_error() {
        let err = parse_config("runs = many\n").unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { line: 1, .. }), "{err}");
    }

    #[test]
    fn comments_and_inline_comments_are_ignored() {
        let text = "# full line\nruns = 3  # trailing\n\nseed = 9\n";
        let LoadedExperiment::Runs(spec) = parse_config(text).unwrap() else { panic!() };
        assert_eq!(spec.runs, 3);
        assert_eq!(spec.seed, 9);
    }

    #[test]
    fn entropy_bins_parse() {
        let LoadedExperiment::Runs(spec) =
            parse_config("experiment = entropy-bins\nentropy_bins = 0:0.2,0.2:0.5\n").unwrap()
        else {
            panic!()
        };
        assert_eq!(spec.kind, ExperimentKind::EntropyBins(vec![(0.0, 0.2), (0.2, 0.5)]));
    }

    #[test]
    fn learning_kind_with_defaults() {
        assert_eq!(
            parse_config("experiment = learning\n").unwrap(),
            LoadedExperiment::Learning { learning_days: 15, routing_days: 30 }
        );
        assert_eq!(
            parse_config("experiment = learning\nlearning_days = 5\nrouting_days = 10\n").unwrap(),
            LoadedExperiment::Learning { learning_days: 5, routing_days: 10 }
        );
    }

    #[test]
    fn duration_keys_are_exclusive() {
        let err = parse_config("duration_days = 2\nduration_seconds = 100\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        let LoadedExperiment::Runs(spec) = parse_config("duration_seconds = 500\n").unwrap() else {
            panic!()
        };
        assert_eq!(spec.params.duration, Some(500));
    }

    #[test]
    fn pattern_window_forms() {
        let LoadedExperiment::Runs(spec) = parse_config("pattern_window = full\n").unwrap() else {
            panic!()
        };
        assert_eq!(spec.params.pattern_window, None);
        let LoadedExperiment::Runs(spec) = parse_config("pattern_window = 100:200\n").unwrap()
        else {
            panic!()
        };
        assert_eq!(spec.params.pattern_window, Some((100, 200)));
    }
}
