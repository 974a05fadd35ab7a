//! Synthetic trace generation with power-law location preferences.
//!
//! Each node gets a private random permutation of the locations and visits
//! the location of rank `r` with probability proportional to
//! `r^(-zipf_exponent)`. Arrivals form a Poisson process whose per-node
//! rate is log-normally spread around `sessions_per_day` (mean 1 factor),
//! so populations contain both near-sedentary and highly active users.
//! Session durations are exponential, clipped to the trace span, and never
//! overlap within one node.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Exp, LogNormal, Zipf};

use super::{Session, Trace, TraceError};
use crate::SECONDS_PER_DAY;

/// Activity window used when `diurnal` is set: arrivals only between
/// 08:00 and 22:00 of each day.
const DIURNAL_START: u64 = 8 * 3600;
const DIURNAL_END: u64 = 22 * 3600;

/// Spread of per-node activity factors (log-normal sigma, mean kept at 1).
const ACTIVITY_SIGMA: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub node_count: u32,
    pub location_count: u32,
    /// Trace span in seconds, starting at the epoch.
    pub duration: u64,
    /// Shape of the per-node location-preference distribution.
    pub zipf_exponent: f64,
    /// Mean session duration in seconds.
    pub mean_session_duration: f64,
    /// Mean arrivals per node per day (before the per-node activity factor).
    pub sessions_per_day: f64,
    /// Restrict arrivals to a day/night activity cycle.
    pub diurnal: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            node_count: 200,
            location_count: 50,
            duration: 45 * SECONDS_PER_DAY,
            zipf_exponent: 2.0,
            mean_session_duration: 4.0 * 3600.0,
            sessions_per_day: 4.0,
            diurnal: false,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<(), TraceError> {
        let bad = |msg: &str| Err(TraceError::InvalidConfig(msg.into()));
        if self.node_count < 1 || self.location_count < 1 {
            return bad("node_count and location_count must be >= 1");
        }
        if self.duration < 1 {
            return bad("duration must be positive");
        }
        if !(self.zipf_exponent > 0.0) {
            return bad("zipf_exponent must be > 0");
        }
        if !(self.mean_session_duration > 0.0) {
            return bad("mean_session_duration must be > 0");
        }
        if !(self.sessions_per_day > 0.0) {
            return bad("sessions_per_day must be > 0");
        }
        Ok(())
    }
}

/// Generate a trace. Deterministic given the seed: each node draws from its
/// own named sub-stream, so changing `node_count` does not reshuffle the
/// sessions of lower-numbered nodes.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Trace, TraceError> {
    cfg.validate()?;

    let rank_dist = Zipf::new(cfg.location_count as f64, cfg.zipf_exponent)
        .map_err(|e| TraceError::InvalidConfig(format!("zipf: {e}")))?;
    let duration_dist = Exp::new(1.0 / cfg.mean_session_duration)
        .map_err(|e| TraceError::InvalidConfig(format!("session duration: {e}")))?;
    let activity_dist = LogNormal::new(-0.5 * ACTIVITY_SIGMA * ACTIVITY_SIGMA, ACTIVITY_SIGMA)
        .map_err(|e| TraceError::InvalidConfig(format!("activity: {e}")))?;

    let mut sessions = Vec::new();
    for node in 0..cfg.node_count {
        let mut rng = crate::rng::stream(cfg.seed, u64::from(node), "synthetic-node");

        let activity: f64 = activity_dist.sample(&mut rng);
        let rate = cfg.sessions_per_day * activity / SECONDS_PER_DAY as f64;
        let gap_dist = Exp::new(rate)
            .map_err(|e| TraceError::InvalidConfig(format!("arrival rate: {e}")))?;

        let mut preference: Vec<u32> = (0..cfg.location_count).collect();
        preference.shuffle(&mut rng);

        let mut t = 0.0f64;
        let mut last_end = 0u64;
        loop {
            t += gap_dist.sample(&mut rng);
            if cfg.diurnal {
                t = next_active_instant(t);
            }
            if t >= cfg.duration as f64 {
                break;
            }
            let rank = rank_dist.sample(&mut rng) as usize; // 1..=location_count
            let location = preference[rank - 1];
            let length = duration_dist.sample(&mut rng).max(1.0);

            let start = (t as u64).max(last_end);
            let end = ((t + length) as u64 + 1).min(cfg.duration);
            if end > start {
                sessions.push(Session { node, location, start, end });
                last_end = end;
            }
            t += length;
        }
    }

    Ok(Trace::with_span(sessions, cfg.node_count, cfg.location_count, (0, cfg.duration)))
}

/// Smallest instant >= t that falls inside the diurnal activity window.
fn next_active_instant(t: f64) -> f64 {
    let day = (t / SECONDS_PER_DAY as f64).floor();
    let tod = t - day * SECONDS_PER_DAY as f64;
    if tod < DIURNAL_START as f64 {
        day * SECONDS_PER_DAY as f64 + DIURNAL_START as f64
    } else if tod >= DIURNAL_END as f64 {
        (day + 1.0) * SECONDS_PER_DAY as f64 + DIURNAL_START as f64
    } else {
        t
    }
}
