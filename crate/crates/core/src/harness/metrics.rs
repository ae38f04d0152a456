//! Per-bin packet statistics.

use std::time::Duration;

/// Final fate of one SUT packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketOutcome {
    Acked { latency: Duration },
    Dropped,
    /// Still queued or in service when the run ended.
    InFlight,
}

/// Nearest-rank percentile of an ascending slice: the `ceil(p * n)`-th
/// smallest value. `None` for an empty slice.
pub fn nearest_rank<T: Copy>(sorted: &[T], p: f64) -> Option<T> {
    assert!(p > 0.0 && p <= 1.0, "percentile {p} outside (0, 1]");
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    // The epsilon keeps p*n products such as 0.29*100 = 28.999999999999996
    // on the intended rank.
    let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Some(sorted[rank.min(n) - 1])
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinStats {
    pub bin: u32,
    pub n_generated: u64,
    pub n_dropped: u64,
    pub n_in_flight: u64,
    /// Latencies of acknowledged packets, in nanoseconds.
    latencies_ns: Vec<u64>,
}

impl BinStats {
    pub fn new(bin: u32) -> Self {
        BinStats {
            bin,
            ..Default::default()
        }
    }

    pub fn record(&mut self, outcome: PacketOutcome) {
        self.n_generated += 1;
        match outcome {
            PacketOutcome::Acked { latency } => {
                self.latencies_ns
                    .push(u64::try_from(latency.as_nanos()).expect("latency fits in u64 ns"));
            }
            PacketOutcome::Dropped => self.n_dropped += 1,
            PacketOutcome::InFlight => self.n_in_flight += 1,
        }
    }

    /// Folds another bin's samples into this one.
    pub fn merge(&mut self, other: &BinStats) {
        self.n_generated += other.n_generated;
        self.n_dropped += other.n_dropped;
        self.n_in_flight += other.n_in_flight;
        self.latencies_ns.extend_from_slice(&other.latencies_ns);
    }

    pub fn n_acked(&self) -> u64 {
        self.latencies_ns.len() as u64
    }

    pub fn latencies_ns(&self) -> &[u64] {
        &self.latencies_ns
    }

    /// Dropped over generated; `None` if nothing was generated.
    pub fn plr(&self) -> Option<f64> {
        (self.n_generated > 0).then(|| self.n_dropped as f64 / self.n_generated as f64)
    }

    pub fn mean_latency_us(&self) -> Option<f64> {
        if self.latencies_ns.is_empty() {
            return None;
        }
        let sum: u128 = self.latencies_ns.iter().map(|&v| v as u128).sum();
        Some(sum as f64 / self.latencies_ns.len() as f64 * 1e-3)
    }

    pub fn percentile_us(&self, p: f64) -> Option<f64> {
        let mut sorted = self.latencies_ns.clone();
        sorted.sort_unstable();
        nearest_rank(&sorted, p).map(|ns| ns as f64 * 1e-3)
    }

    pub fn p99_latency_us(&self) -> Option<f64> {
        self.percentile_us(0.99)
    }
}
