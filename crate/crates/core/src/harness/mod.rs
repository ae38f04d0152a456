//! Metrics, reports, parameter files and scenario sweeps.

pub mod chart;
pub mod config;
pub mod metrics;
pub mod report;
pub mod sweep;

pub use chart::{emit_chart, Metric, Series};
pub use config::{apply_override, load_params, parse_params};
pub use metrics::{BinStats, PacketOutcome};
pub use report::{CsvRow, CSV_HEADER};
pub use sweep::{run_sweep, simulate, ScenarioResult, SweepSpec, REPORT_BINS};
