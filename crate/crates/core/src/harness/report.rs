//! CSV reports: per-bin summaries, raw per-packet logs and Minstrel traces.

use std::fmt::Write as _;

use crate::engine::{RawOutcome, RawRecord, TraceRow};
use crate::{Error, Result, SimTime};

use super::metrics::BinStats;

pub const CSV_HEADER: &str = "bin_m,n_generated,n_dropped,plr,mean_latency_us,p99_latency_us";
pub const RAW_HEADER: &str = "run,seq,gen_ns,bin,attempts,outcome,done_ns";

/// One line of the per-bin summary. `None` marks "no data".
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub bin: u32,
    pub n_generated: u64,
    pub n_dropped: u64,
    pub plr: Option<f64>,
    pub mean_latency_us: Option<f64>,
    pub p99_latency_us: Option<f64>,
}

impl CsvRow {
    pub fn from_bin(b: &BinStats) -> Self {
        CsvRow {
            bin: b.bin,
            n_generated: b.n_generated,
            n_dropped: b.n_dropped,
            plr: b.plr(),
            mean_latency_us: b.mean_latency_us(),
            p99_latency_us: b.p99_latency_us(),
        }
    }
}

fn field(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_default()
}

pub fn to_csv(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.bin,
            r.n_generated,
            r.n_dropped,
            field(r.plr, 6),
            field(r.mean_latency_us, 3),
            field(r.p99_latency_us, 3),
        );
    }
    out
}

fn malformed(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::MalformedReport(format!("line {line}: {msg}"))
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| malformed(line, format!("bad number {s:?}")))
}

fn parse_int<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| malformed(line, format!("bad integer {s:?}")))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(malformed(1, "missing or unexpected header")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let n = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(malformed(n, format!("expected 6 fields, found {}", f.len())));
            }
            Ok(CsvRow {
                bin: parse_int(f[0], n)?,
                n_generated: parse_int(f[1], n)?,
                n_dropped: parse_int(f[2], n)?,
                plr: parse_opt(f[3], n)?,
                mean_latency_us: parse_opt(f[4], n)?,
                p99_latency_us: parse_opt(f[5], n)?,
            })
        })
        .collect()
}

/// Raw per-packet log. Times are integer nanoseconds so the summary can be
/// rebuilt exactly; `run` distinguishes the independent runs of a static
/// sweep.
pub fn raw_log_to_csv(records: &[(u32, RawRecord)]) -> String {
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(RAW_HEADER);
    out.push('\n');
    for (run, r) in records {
        let bin = r.bin.map(|b| b.to_string()).unwrap_or_default();
        let (outcome, done) = match r.outcome {
            RawOutcome::Acked { at } => ("acked", at.as_nanos().to_string()),
            RawOutcome::Dropped { at } => ("dropped", at.as_nanos().to_string()),
            RawOutcome::InFlight => ("in_flight", String::new()),
        };
        let _ = writeln!(
            out,
            "{run},{},{},{bin},{},{outcome},{done}",
            r.seq,
            r.gen_time.as_nanos(),
            r.attempts
        );
    }
    out
}

pub fn parse_raw_log(text: &str) -> Result<Vec<(u32, RawRecord)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RAW_HEADER => {}
        _ => return Err(malformed(1, "missing or unexpected raw-log header")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let n = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(malformed(n, format!("expected 7 fields, found {}", f.len())));
            }
            let at = || parse_int::<u64>(f[6], n).map(SimTime::from_nanos);
            let outcome = match f[5] {
                "acked" => RawOutcome::Acked { at: at()? },
                "dropped" => RawOutcome::Dropped { at: at()? },
                "in_flight" => RawOutcome::InFlight,
                other => return Err(malformed(n, format!("unknown outcome {other:?}"))),
            };
            let bin = if f[3].is_empty() { None } else { Some(parse_int(f[3], n)?) };
            Ok((
                parse_int(f[0], n)?,
                RawRecord {
                    seq: parse_int(f[1], n)?,
                    gen_time: SimTime::from_nanos(parse_int(f[2], n)?),
                    bin,
                    attempts: parse_int(f[4], n)?,
                    outcome,
                },
            ))
        })
        .collect()
}

/// Rebuilds per-bin statistics from raw records, keeping bins in `range`.
pub fn reaggregate(
    records: &[(u32, RawRecord)],
    range: std::ops::RangeInclusive<u32>,
) -> Vec<BinStats> {
    let mut bins: Vec<BinStats> = range.clone().map(BinStats::new).collect();
    for (_, r) in records {
        if let Some(b) = r.bin.filter(|b| range.contains(b)) {
            bins[(b - range.start()) as usize].record(r.packet_outcome());
        }
    }
    bins
}

pub fn trace_to_csv(rows: &[(u32, TraceRow)]) -> String {
    let mut out = String::from("run,time_s");
    for i in 0..crate::phy::NUM_MCS {
        let _ = write!(out, ",ewma_{i}");
    }
    out.push_str(",max_tp\n");
    for (run, r) in rows {
        let _ = write!(out, "{run},{:.3}", r.time.as_secs_f64());
        for e in &r.ewma {
            let _ = write!(out, ",{e:.6}");
        }
        let _ = writeln!(out, ",{}", r.max_tp.index());
    }
    out
}
