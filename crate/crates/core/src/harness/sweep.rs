//! Running the configuration × mobility grid and writing results to disk.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use crate::engine::{
    build_scenario, MobilityScenario, NetworkConfig, Params, RawRecord, RunOutput, ScenarioConfig, SourceCounts,
    TraceRow,
};
use crate::{Error, Result};

use super::chart::{emit_chart, Metric, Series};
use super::metrics::BinStats;
use super::report::{raw_log_to_csv, to_csv, trace_to_csv, CsvRow};

/// Bins that appear in reports; the half-width edge bins 0 and 51 are left out.
pub const REPORT_BINS: RangeInclusive<u32> = 1..=50;

/// Aggregated outcome of one (configuration, mobility) pair.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub network: NetworkConfig,
    pub mobility: MobilityScenario,
    /// One entry per bin in [`REPORT_BINS`].
    pub bins: Vec<BinStats>,
    /// Source counters of every underlying run.
    pub sources: Vec<SourceCounts>,
    /// Minstrel trace rows tagged with the run they came from.
    pub trace: Vec<(u32, TraceRow)>,
    pub raw: Vec<(u32, RawRecord)>,
}

impl ScenarioResult {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.bins.iter().map(CsvRow::from_bin).collect()
    }

    pub fn bin(&self, bin: u32) -> &BinStats {
        &self.bins[(bin - REPORT_BINS.start()) as usize]
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.network, self.mobility)
    }
}

fn run_one(config: &ScenarioConfig) -> Result<RunOutput> {
    Ok(build_scenario(config)?.run())
}

#[cfg(feature = "parallel")]
fn run_static_bins(configs: &[ScenarioConfig]) -> Result<Vec<RunOutput>> {
    use rayon::prelude::*;
    configs.par_iter().map(run_one).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_static_bins(configs: &[ScenarioConfig]) -> Result<Vec<RunOutput>> {
    configs.iter().map(run_one).collect()
}

/// Simulates one (configuration, mobility) pair.
///
/// Static scenarios are one independent run per reported bin, each lasting
/// the dwell time with the SUT parked at the bin centre. All of them use the
/// same seed. Mobile scenarios are a single run long enough for every bin to
/// collect the dwell time.
pub fn simulate(
    network: NetworkConfig,
    mobility: MobilityScenario,
    dwell: f64,
    seed: u64,
    params: &Params,
    trace: bool,
    raw: bool,
) -> Result<ScenarioResult> {
    let base = ScenarioConfig {
        dwell_per_bin: dwell,
        seed,
        params: params.clone(),
        trace_minstrel: trace,
        raw_log: raw,
        ..ScenarioConfig::new(network, mobility)
    };
    let mut result = ScenarioResult {
        network,
        mobility,
        bins: REPORT_BINS.map(BinStats::new).collect(),
        sources: Vec::new(),
        trace: Vec::new(),
        raw: Vec::new(),
    };
    let outputs: Vec<(u32, RunOutput)> = if mobility == MobilityScenario::Static {
        let configs: Vec<_> = REPORT_BINS
            .map(|b| ScenarioConfig {
                static_position: b as f64,
                ..base.clone()
            })
            .collect();
        REPORT_BINS.zip(run_static_bins(&configs)?).collect()
    } else {
        vec![(0, run_one(&base)?)]
    };
    for (run, out) in outputs {
        for (k, b) in REPORT_BINS.enumerate() {
            if let Some(stats) = out.bins.get(b as usize) {
                result.bins[k].merge(stats);
            }
        }
        result.sources.extend(out.sources);
        result.trace.extend(out.trace.into_iter().map(|r| (run, r)));
        result.raw.extend(out.raw.into_iter().map(|r| (run, r)));
    }
    Ok(result)
}

/// What to run and where to write it.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub networks: Vec<NetworkConfig>,
    pub mobilities: Vec<MobilityScenario>,
    pub dwell: f64,
    pub seed: u64,
    pub params: Params,
    pub out_dir: PathBuf,
    pub trace_minstrel: bool,
    pub raw_log: bool,
    pub svg: bool,
}

fn write(path: &Path, contents: &str) -> Result<PathBuf> {
    fs::write(path, contents).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

/// Runs every requested pair and writes `<config>_<mobility>.csv` per pair,
/// plus optional traces, raw logs and one SVG per configuration and metric.
/// Returns the paths written.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<PathBuf>> {
    if spec.networks.is_empty() || spec.mobilities.is_empty() {
        return Err(Error::InvalidScenario("nothing to run".into()));
    }
    fs::create_dir_all(&spec.out_dir).map_err(|source| Error::Output {
        path: spec.out_dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for &network in &spec.networks {
        let mut per_network = Vec::new();
        for &mobility in &spec.mobilities {
            let r = simulate(
                network,
                mobility,
                spec.dwell,
                spec.seed,
                &spec.params,
                spec.trace_minstrel,
                spec.raw_log,
            )?;
            let stem = r.file_stem();
            let rows = r.rows();
            written.push(write(&spec.out_dir.join(format!("{stem}.csv")), &to_csv(&rows))?);
            if spec.trace_minstrel {
                written.push(write(
                    &spec.out_dir.join(format!("{stem}_minstrel.csv")),
                    &trace_to_csv(&r.trace),
                )?);
            }
            if spec.raw_log {
                written.push(write(
                    &spec.out_dir.join(format!("{stem}_raw.csv")),
                    &raw_log_to_csv(&r.raw),
                )?);
            }
            per_network.push((mobility, rows));
        }
        if spec.svg {
            for metric in Metric::ALL {
                let series: Vec<Series> = per_network
                    .iter()
                    .map(|(m, rows)| Series::from_rows(m.name(), rows, metric))
                    .collect();
                let title = format!("{} - {}", network.name().to_uppercase(), metric.column());
                written.push(write(
                    &spec.out_dir.join(format!("{network}_{}.svg", metric.column())),
                    &emit_chart(&series, metric, &title),
                )?);
            }
        }
    }
    Ok(written)
}
