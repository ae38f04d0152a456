//! Application packet sources: the station under test's periodic control
//! messages and the interferer's bursty bulk transfers.

use std::time::Duration;

use rand::Rng;

use crate::SimTime;

/// UDP 8 + IPv4 20 + LLC/SNAP 8 + MAC header 24 + FCS 4.
pub const HEADER_OVERHEAD_BYTES: u32 = 64;

pub fn psdu_bytes(payload: u32) -> u32 {
    payload + HEADER_OVERHEAD_BYTES
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSource {
    pub period: Duration,
    pub payload: u32,
    pub start_offset: Duration,
}

impl Default for PeriodicSource {
    fn default() -> Self {
        PeriodicSource {
            period: Duration::from_millis(500),
            payload: 22,
            start_offset: Duration::ZERO,
        }
    }
}

impl PeriodicSource {
    /// Generation instant of the `k`-th packet.
    pub fn periodic_next(&self, k: u64) -> SimTime {
        let period = u64::try_from(self.period.as_nanos()).expect("period fits");
        SimTime::ZERO + self.start_offset + Duration::from_nanos(k * period)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurstySource {
    pub gap_mean: Duration,
    pub gap_cap: Duration,
    pub count_mean: f64,
    pub count_cap: u32,
    pub intra_spacing: Duration,
    pub payload: u32,
}

impl Default for BurstySource {
    fn default() -> Self {
        BurstySource {
            gap_mean: Duration::from_micros(250),
            gap_cap: Duration::from_secs(10),
            count_mean: 100.0,
            count_cap: 500,
            intra_spacing: Duration::from_micros(500),
            payload: 1472,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Burst {
    /// Silence before the burst, counted from the previous burst's last packet.
    pub gap: Duration,
    pub count: u32,
}

/// Inverse-CDF exponential draw, so the stream is reproducible from the
/// uniform sequence alone.
pub fn exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    -mean * (-rng.random::<f64>()).ln_1p()
}

impl BurstySource {
    pub fn burst_schedule_next<R: Rng + ?Sized>(&self, rng: &mut R) -> Burst {
        let gap_s = exponential(self.gap_mean.as_secs_f64(), rng);
        let gap = Duration::from_nanos((gap_s * 1e9).round() as u64).clamp(Duration::from_nanos(1), self.gap_cap);
        let count = clamp_count(exponential(self.count_mean, rng), self.count_cap);
        Burst { gap, count }
    }

    pub fn burst_packet_times(&self, burst_start: SimTime, count: u32) -> Vec<SimTime> {
        debug_assert!(count >= 1);
        (0..count).map(|i| burst_start + self.intra_spacing * i).collect()
    }
}

/// Rounds a continuous count draw and forces it into `[1, cap]`.
pub fn clamp_count(draw: f64, cap: u32) -> u32 {
    (draw.round() as u32).clamp(1, cap)
}
