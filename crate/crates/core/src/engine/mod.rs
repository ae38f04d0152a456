//! Deterministic discrete-event core.
//!
//! A run is fully determined by its [`ScenarioConfig`]: every random draw
//! comes from a per-node, per-purpose stream derived from the master seed
//! (see [`rng::rng_stream`]), and simultaneous events fire in scheduling
//! order.

mod queue;
pub mod rng;
mod scenario;
mod sim;

pub use queue::EventQueue;
pub use scenario::{
    build_scenario, Geometry, MobilityScenario, NetworkConfig, Params, ScenarioConfig,
};
pub use sim::{Event, Role, RunOutput, Simulation, SourceCounts, TraceRow, RawRecord, RawOutcome};
