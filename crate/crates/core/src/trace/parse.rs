//! Session CSV ingestion and export.
//!
//! Format: UTF-8 lines `node_id,location_id,start_seconds,end_seconds`
//! with integer fields. `#`-prefixed comment lines and blank lines are
//! skipped. No header. An optional `# span <t0> <t1>` comment declares an
//! observation window wider than the data (synthetic traces emit it so a
//! round trip through CSV keeps their configured duration).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{Session, Trace, TraceError};

/// Result of ingesting a session CSV.
#[derive(Debug)]
pub struct ParseOutcome {
    pub trace: Trace,
    /// Sessions truncated to restore the one-location-at-a-time invariant.
    pub normalized: u64,
    /// Lines dropped because `end <= start`.
    pub rejected: u64,
}

/// Parse a session CSV into a [`Trace`] with dense identifiers.
///
/// Overlapping sessions of one node are normalized by truncating the
/// earlier session at the later session's start. Malformed lines abort
/// with the offending line number; lines with `end <= start` are dropped
/// and counted.
pub fn parse_sessions(reader: impl BufRead) -> Result<ParseOutcome, TraceError> {
    let mut raw: Vec<(u64, u64, u64, u64)> = Vec::new();
    let mut rejected = 0u64;
    let mut declared_span: Option<(u64, u64)> = None;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            if let Some(rest) = text.strip_prefix("# span ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if let [t0, t1] = parts[..] {
                    if let (Ok(t0), Ok(t1)) = (t0.parse(), t1.parse()) {
                        declared_span = Some((t0, t1));
                    }
                }
            }
            continue;
        }
        let mut fields = text.split(',');
        let mut next_int = |name: &str| -> Result<u64, TraceError> {
            let field = fields.next().ok_or_else(|| TraceError::Malformed {
                line: lineno,
                msg: format!("missing field `{name}`"),
            })?;
            field.trim().parse::<u64>().map_err(|_| TraceError::Malformed {
                line: lineno,
                msg: format!("field `{name}` is not an unsigned integer: `{}`", field.trim()),
            })
        };
        let node = next_int("node_id")?;
        let location = next_int("location_id")?;
        let start = next_int("start_seconds")?;
        let end = next_int("end_seconds")?;
        if fields.next().is_some() {
            return Err(TraceError::Malformed { line: lineno, msg: "expected 4 fields".into() });
        }
        if end <= start {
            rejected += 1;
            continue;
        }
        raw.push((node, location, start, end));
    }

    if raw.is_empty() {
        return Err(TraceError::Empty);
    }

    // Dense remap by ascending raw identifier.
    let mut node_map = BTreeMap::new();
    let mut location_map = BTreeMap::new();
    for &(n, l, _, _) in &raw {
        node_map.entry(n).or_insert(0u32);
        location_map.entry(l).or_insert(0u32);
    }
    for (next, v) in node_map.values_mut().enumerate() {
        *v = next as u32;
    }
    for (next, v) in location_map.values_mut().enumerate() {
        *v = next as u32;
    }

    let mut sessions: Vec<Session> = raw
        .into_iter()
        .map(|(n, l, start, end)| Session {
            node: node_map[&n],
            location: location_map[&l],
            start,
            end,
        })
        .collect();

    let normalized = normalize_overlaps(&mut sessions);
    if sessions.is_empty() {
        return Err(TraceError::Empty);
    }
    let trace = Trace::new(sessions, node_map.len() as u32, location_map.len() as u32);
    let trace = match declared_span {
        // widen-only union: the declared window never hides data
        Some((t0, t1)) => {
            let data = trace.span();
            let span = (t0.min(data.0), t1.max(data.1));
            Trace::with_span(trace.sessions().to_vec(), trace.node_count(), trace.location_count(), span)
        }
        None => trace,
    };
    Ok(ParseOutcome { trace, normalized, rejected })
}

/// Truncate each overlapping session at the next session's start, per node.
/// Returns the number of truncations (dropped-to-empty included).
fn normalize_overlaps(sessions: &mut Vec<Session>) -> u64 {
    sessions.sort_unstable_by_key(|s| (s.node, s.start, s.end, s.location));
    let mut normalized = 0u64;
    let mut out: Vec<Session> = Vec::with_capacity(sessions.len());
    for s in sessions.drain(..) {
        if let Some(prev) = out.last_mut() {
            if prev.node == s.node && s.start < prev.end {
                normalized += 1;
                if s.start > prev.start {
                    prev.end = s.start;
                } else {
                    out.pop();
                }
            }
        }
        out.push(s);
    }
    *sessions = out;
    normalized
}

/// Write a trace back out in the session CSV format, sorted by start time.
/// The span directive keeps the observation window across round trips.
pub fn write_sessions(trace: &Trace, mut w: impl Write) -> std::io::Result<()> {
    let (t0, t1) = trace.span();
    writeln!(w, "# span {t0} {t1}")?;
    for s in trace.sessions() {
        writeln!(w, "{},{},{},{}", s.node, s.location, s.start, s.end)?;
    }
    Ok(())
}
