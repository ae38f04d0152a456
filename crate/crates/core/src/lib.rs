//! Discrete-event simulation of a single-AP 802.11a cell in which stations
//! pick their transmission rate with Minstrel.
//!
//! The crate is layered bottom-up:
//!
//! * [`phy`]: MCS table, OFDM airtime, SINR to packet-error-rate.
//! * [`channel`]: log-distance path loss, propagation delay, reception
//!   resolution with overlapping interferers.
//! * [`mac`]: DCF contention, binary exponential backoff, retry chains.
//! * [`minstrel`]: the rate-adaptation algorithm itself.
//! * [`mobility`] and [`traffic`]: where the station is and when it has
//!   something to send.
//! * [`engine`]: event queue, RNG streams, scenario wiring and the event loop.
//! * [`harness`]: per-bin metrics, CSV/SVG output, config files and sweeps.

pub mod channel;
pub mod engine;
mod error;
pub mod harness;
pub mod mac;
pub mod minstrel;
pub mod mobility;
pub mod phy;
pub mod time;
pub mod traffic;

pub use error::{Error, Result};
pub use time::SimTime;
