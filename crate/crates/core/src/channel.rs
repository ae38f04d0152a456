//! Propagation and reception: log-distance path loss, constant-speed delay,
//! and per-frame delivery decisions in the presence of overlapping frames.

use std::time::Duration;

use rand::Rng;

use crate::mac::{Frame, FrameKind};
use crate::phy::{self, dbm_to_mw, mw_to_dbm, ErrorModel, PhyParams};
use crate::SimTime;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Position on the floor plan, in meters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub exponent: f64,
    /// Loss at the 1 m reference distance.
    pub reference_loss_db: f64,
    pub propagation_speed: f64,
    /// Distance at which frames are still just decodable.
    pub d_max_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            exponent: 3.0,
            reference_loss_db: 46.6777,
            propagation_speed: SPEED_OF_LIGHT,
            d_max_m: 51.45,
        }
    }
}

impl ChannelParams {
    /// Log-distance loss; distances under the 1 m reference are clamped to it.
    pub fn path_loss(&self, distance_m: f64) -> f64 {
        debug_assert!(distance_m >= 0.0);
        if distance_m <= 1.0 {
            self.reference_loss_db
        } else {
            self.reference_loss_db + 10.0 * self.exponent * distance_m.log10()
        }
    }

    /// Rounded to the nearest nanosecond, the resolution of the clock.
    pub fn propagation_delay(&self, distance_m: f64) -> Duration {
        Duration::from_nanos((distance_m / self.propagation_speed * 1e9).round() as u64)
    }

    pub fn rx_power(&self, tx_power_dbm: f64, tx: Point, rx: Point) -> f64 {
        tx_power_dbm - self.path_loss(tx.distance(rx))
    }
}

/// A frame as radiated by its transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnAirFrame {
    pub frame: Frame,
    pub tx_start: SimTime,
    pub tx_end: SimTime,
    pub tx_power_dbm: f64,
    pub tx_position: Point,
}

impl OnAirFrame {
    /// Interval during which this frame's energy is present at `rx`.
    pub fn arrival_at(&self, rx: Point, channel: &ChannelParams) -> (SimTime, SimTime) {
        let delay = channel.propagation_delay(self.tx_position.distance(rx));
        (self.tx_start + delay, self.tx_end + delay)
    }

    pub fn power_at(&self, rx: Point, channel: &ChannelParams) -> f64 {
        channel.rx_power(self.tx_power_dbm, self.tx_position, rx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reception {
    Delivered,
    Corrupted,
    BelowSensitivity,
}

/// Largest instantaneous interference power (mW) that `overlapping` frames
/// put on top of `target` while it is arriving at `rx`.
pub fn peak_interference_mw(
    target: &OnAirFrame,
    rx: Point,
    overlapping: &[OnAirFrame],
    channel: &ChannelParams,
) -> f64 {
    let (start, end) = target.arrival_at(rx, channel);
    // Step changes of the interference sum, clipped to the target window.
    let mut steps: Vec<(SimTime, f64)> = Vec::with_capacity(2 * overlapping.len());
    for other in overlapping {
        let (a, b) = other.arrival_at(rx, channel);
        let (a, b) = (a.max(start), b.min(end));
        if a < b {
            let mw = dbm_to_mw(other.power_at(rx, channel));
            steps.push((a, mw));
            steps.push((b, -mw));
        }
    }
    // Ends sort before starts at the same instant: touching frames do not overlap.
    steps.sort_by(|l, r| l.0.cmp(&r.0).then(l.1.total_cmp(&r.1)));
    let mut level = 0.0_f64;
    let mut peak = 0.0_f64;
    for (_, delta) in steps {
        level += delta;
        peak = peak.max(level);
    }
    peak
}

/// Worst-case SINR of `target` at `rx` over its whole airtime.
pub fn min_sinr_db(
    target: &OnAirFrame,
    rx: Point,
    overlapping: &[OnAirFrame],
    phy: &PhyParams,
    channel: &ChannelParams,
) -> f64 {
    let noise = dbm_to_mw(phy.noise_floor_dbm());
    let interference = peak_interference_mw(target, rx, overlapping, channel);
    phy::snr(target.power_at(rx, channel), mw_to_dbm(noise + interference))
}

/// Failure probability of `target` at `rx`, or `None` if it is too weak to
/// be decoded at all.
pub fn corruption_probability(
    target: &OnAirFrame,
    rx: Point,
    overlapping: &[OnAirFrame],
    phy: &PhyParams,
    channel: &ChannelParams,
    errors: &ErrorModel,
) -> Option<f64> {
    if target.power_at(rx, channel) < phy.rx_sensitivity_dbm {
        return None;
    }
    let sinr = min_sinr_db(target, rx, overlapping, phy, channel);
    let f = &target.frame;
    Some(match f.kind {
        FrameKind::Data => errors.data_per(f.mcs, sinr, f.psdu_bytes),
        FrameKind::Ack => phy::per(f.mcs.entry(), sinr, f.psdu_bytes),
    })
}

/// Decides whether `target` is decoded at `rx`. One uniform draw is taken
/// from `rng` for every frame above sensitivity.
pub fn resolve_reception<R: Rng + ?Sized>(
    target: &OnAirFrame,
    rx: Point,
    overlapping: &[OnAirFrame],
    phy: &PhyParams,
    channel: &ChannelParams,
    errors: &ErrorModel,
    rng: &mut R,
) -> Reception {
    match corruption_probability(target, rx, overlapping, phy, channel, errors) {
        None => Reception::BelowSensitivity,
        Some(p) => {
            if rng.random::<f64>() >= p {
                Reception::Delivered
            } else {
                Reception::Corrupted
            }
        }
    }
}
