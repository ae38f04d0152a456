use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use minstrel_sim::engine::{MobilityScenario, NetworkConfig, Params};
use minstrel_sim::harness::{load_params, run_sweep, SweepSpec};

const PAPER_DWELL_S: f64 = 30_000.0;

/// Sweep Minstrel latency and loss over SUT position for the NO_INT,
/// VISIBLE and HIDDEN cells, static or moving.
#[derive(Parser, Debug)]
#[command(name = "minstrel-sim", version)]
struct Args {
    /// Network configurations: no_int, visible, hidden (comma separated) or all.
    #[arg(long, default_value = "all")]
    config: String,

    /// Mobility scenarios: static, slow, medium, fast (comma separated) or all.
    #[arg(long, default_value = "all")]
    mobility: String,

    /// Seconds of SUT presence per 1 m bin.
    #[arg(long, default_value_t = 600.0)]
    dwell: f64,

    /// Use the full 30000 s dwell per bin (overrides --dwell).
    #[arg(long)]
    paper_scale: bool,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Output directory, created if missing.
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Parameter file with `key = value` overrides.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,

    /// Also write the SUT's Minstrel statistics after every update.
    #[arg(long)]
    trace_minstrel: bool,

    /// Also write one line per SUT packet.
    #[arg(long)]
    raw_log: bool,

    /// Also write one SVG chart per configuration and metric.
    #[arg(long)]
    svg: bool,
}

fn parse_list<T: std::str::FromStr<Err = minstrel_sim::Error>>(raw: &str, all: &[T]) -> Result<Vec<T>>
where
    T: Copy + PartialEq,
{
    if raw.trim().eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    let mut out = Vec::new();
    for item in raw.split(',') {
        let v: T = item.parse()?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

fn run(args: Args) -> Result<()> {
    let networks = parse_list(&args.config, &NetworkConfig::ALL)?;
    let mobilities = parse_list(&args.mobility, &MobilityScenario::ALL)?;
    let params = match &args.params {
        Some(path) => load_params(path).with_context(|| format!("reading parameters from {}", path.display()))?,
        None => Params::default(),
    };
    let dwell = if args.paper_scale { PAPER_DWELL_S } else { args.dwell };
    let spec = SweepSpec {
        networks,
        mobilities,
        dwell,
        seed: args.seed,
        params,
        out_dir: args.out,
        trace_minstrel: args.trace_minstrel,
        raw_log: args.raw_log,
        svg: args.svg,
    };
    let started = Instant::now();
    let written = run_sweep(&spec)?;
    for path in &written {
        println!("{}", path.display());
    }
    eprintln!(
        "{} file(s) written in {:.1} s (dwell {dwell} s/bin, seed {})",
        written.len(),
        started.elapsed().as_secs_f64(),
        spec.seed
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("minstrel-sim: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
