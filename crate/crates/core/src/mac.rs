//! DCF medium access: contention windows, backoff countdown with freezing,
//! retry chains and ACK timing.

use std::fmt;
use std::time::Duration;

use rand::Rng;

use crate::channel::{ChannelParams, OnAirFrame, Point};
use crate::phy::{Mcs, PhyParams, ACK_PSDU_BYTES};
use crate::{Error, Result, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Data,
    Ack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub psdu_bytes: u32,
    pub mcs: Mcs,
    pub seq: u64,
    /// When the application handed the packet down.
    pub gen_time: SimTime,
}

impl Frame {
    /// The ACK answering this data frame.
    pub fn ack(&self) -> Frame {
        Frame {
            kind: FrameKind::Ack,
            src: self.dst,
            dst: self.src,
            psdu_bytes: ACK_PSDU_BYTES,
            mcs: self.mcs.ack_rate(),
            seq: self.seq,
            gen_time: self.gen_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacParams {
    pub cw_min: u32,
    pub cw_max: u32,
    /// Retransmissions after the first attempt.
    pub retry_limit: u32,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            cw_min: 15,
            cw_max: 1023,
            retry_limit: 7,
        }
    }
}

impl MacParams {
    /// Total transmissions a packet may use.
    pub fn attempt_budget(&self) -> u32 {
        self.retry_limit + 1
    }

    pub fn validate(&self) -> Result<()> {
        let pow2m1 = |v: u32| (v + 1).is_power_of_two();
        if !(pow2m1(self.cw_min) && pow2m1(self.cw_max) && self.cw_min < self.cw_max) {
            return Err(Error::InvalidScenario(format!(
                "contention windows must be 2^k-1 with cw_min < cw_max (got {}, {})",
                self.cw_min, self.cw_max
            )));
        }
        if self.retry_limit < 1 {
            return Err(Error::InvalidScenario("retry_limit must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform backoff in `[0, cw]` slots.
pub fn backoff_draw<R: Rng + ?Sized>(cw: u32, params: &MacParams, rng: &mut R) -> Result<u32> {
    if cw < params.cw_min || cw > params.cw_max {
        return Err(Error::ContentionWindow {
            cw,
            min: params.cw_min,
            max: params.cw_max,
        });
    }
    Ok(rng.random_range(0..=cw))
}

pub fn next_cw(cw: u32, params: &MacParams) -> u32 {
    (2 * cw + 1).min(params.cw_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelState {
    Busy,
    Idle,
}

/// Energy detection at `listener`: busy iff some frame on the air is
/// arriving there at `t` above the carrier-sense threshold.
pub fn carrier_sense(
    listener: Point,
    t: SimTime,
    on_air: &[OnAirFrame],
    phy: &PhyParams,
    channel: &ChannelParams,
) -> ChannelState {
    let busy = on_air.iter().any(|f| {
        let (start, end) = f.arrival_at(listener, channel);
        start <= t && t < end && f.power_at(listener, channel) >= phy.cs_threshold_dbm
    });
    if busy {
        ChannelState::Busy
    } else {
        ChannelState::Idle
    }
}

/// How long a transmitter waits after its data frame ends before declaring
/// the attempt lost: SIFS, the ACK itself, one slot of slack and a round
/// trip at the maximum range.
pub fn ack_timeout_for(mcs: Mcs, phy: &PhyParams, channel: &ChannelParams) -> Duration {
    let ack = phy.airtime(mcs.ack_rate().entry(), ACK_PSDU_BYTES);
    phy.sifs() + ack + phy.slot() + 2 * channel.propagation_delay(channel.d_max_m)
}

/// Ordered `(rate, attempts)` segments used for successive attempts of one
/// packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryChain {
    segments: Vec<(Mcs, u32)>,
}

impl RetryChain {
    pub fn new(segments: Vec<(Mcs, u32)>) -> Self {
        debug_assert!(!segments.is_empty());
        RetryChain { segments }
    }

    pub fn segments(&self) -> &[(Mcs, u32)] {
        &self.segments
    }

    pub fn total_attempts(&self) -> u32 {
        self.segments.iter().map(|&(_, n)| n).sum()
    }

    /// Rate for zero-based attempt `attempt`, or `None` past the budget.
    pub fn rate_for_attempt(&self, attempt: u32) -> Option<Mcs> {
        let mut left = attempt;
        for &(mcs, n) in &self.segments {
            if left < n {
                return Some(mcs);
            }
            left -= n;
        }
        None
    }

    /// The rate used by each attempt, in order.
    pub fn attempts(&self) -> impl Iterator<Item = Mcs> + '_ {
        self.segments
            .iter()
            .flat_map(|&(mcs, n)| std::iter::repeat_n(mcs, n as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptOutcome {
    Acked,
    NoAck,
}

/// Outcome of a single transmission attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxAttemptResult {
    pub seq: u64,
    pub attempt: u32,
    pub mcs: Mcs,
    pub outcome: AttemptOutcome,
    pub tx_start: SimTime,
    pub resolved_at: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Access {
    /// Nothing to send, or the current attempt is on the air / awaiting ACK.
    Inactive,
    /// Waiting for DIFS plus `remaining` idle slots, counted from
    /// `requested_at` or the end of the latest busy period, whichever is later.
    Contending { requested_at: SimTime, remaining: u32 },
}

/// Per-station DCF contention state.
///
/// The owner reports every busy/idle transition of the medium as seen at
/// the station (its own transmissions included) and schedules a backoff
/// expiry whenever [`Dcf::expiry`] changes, tagging it with
/// [`Dcf::token`] so stale expiries can be told apart.
#[derive(Debug, Clone)]
pub struct Dcf {
    params: MacParams,
    difs: Duration,
    slot: Duration,
    cw: u32,
    access: Access,
    busy_sources: u32,
    idle_since: SimTime,
    token: u64,
}

impl Dcf {
    pub fn new(params: MacParams, phy: &PhyParams) -> Self {
        Dcf {
            cw: params.cw_min,
            params,
            difs: phy.difs(),
            slot: phy.slot(),
            access: Access::Inactive,
            busy_sources: 0,
            idle_since: SimTime::ZERO,
            token: 0,
        }
    }

    pub fn cw(&self) -> u32 {
        self.cw
    }

    pub fn token(&self) -> u64 {
        self.token
    }

    pub fn medium_busy(&self) -> bool {
        self.busy_sources > 0
    }

    pub fn is_contending(&self) -> bool {
        matches!(self.access, Access::Contending { .. })
    }

    /// Remaining backoff slots, when contending.
    pub fn remaining_slots(&self) -> Option<u32> {
        match self.access {
            Access::Contending { remaining, .. } => Some(remaining),
            Access::Inactive => None,
        }
    }

    fn countdown_start(&self, requested_at: SimTime) -> SimTime {
        requested_at.max(self.idle_since) + self.difs
    }

    /// When the pending backoff completes if the medium stays idle.
    pub fn expiry(&self) -> Option<SimTime> {
        match self.access {
            Access::Contending { requested_at, remaining } if !self.medium_busy() => {
                Some(self.countdown_start(requested_at) + self.slot * remaining)
            }
            _ => None,
        }
    }

    /// Starts contending for the next attempt with a fresh backoff drawn from
    /// the current window.
    pub fn request_access<R: Rng + ?Sized>(&mut self, now: SimTime, rng: &mut R) -> Option<SimTime> {
        let slots = backoff_draw(self.cw, &self.params, rng).expect("cw kept within bounds");
        self.access = Access::Contending {
            requested_at: now,
            remaining: slots,
        };
        self.token += 1;
        self.expiry()
    }

    /// The medium turned busy for one more source. Freezes the countdown,
    /// keeping the slots that fully elapsed.
    pub fn on_medium_busy(&mut self, now: SimTime) {
        self.busy_sources += 1;
        if self.busy_sources > 1 {
            return;
        }
        if let Access::Contending { requested_at, remaining } = self.access {
            let start = self.countdown_start(requested_at);
            let elapsed = if now > start {
                ((now - start).as_nanos() / self.slot.as_nanos()) as u32
            } else {
                0
            };
            self.access = Access::Contending {
                requested_at,
                remaining: remaining - elapsed.min(remaining),
            };
            self.token += 1;
        }
    }

    /// One busy source went away. Returns the new expiry if the medium just
    /// became idle and a backoff is pending.
    pub fn on_medium_idle(&mut self, now: SimTime) -> Option<SimTime> {
        self.busy_sources = self
            .busy_sources
            .checked_sub(1)
            .expect("idle transition without matching busy");
        if self.busy_sources > 0 {
            return None;
        }
        self.idle_since = now;
        if self.is_contending() {
            self.token += 1;
        }
        self.expiry()
    }

    /// Backoff completed; the station transmits now.
    pub fn begin_transmission(&mut self) {
        debug_assert!(self.is_contending());
        self.access = Access::Inactive;
        self.token += 1;
    }

    /// Window after a failed attempt.
    pub fn on_failure(&mut self) {
        self.cw = next_cw(self.cw, &self.params);
    }

    /// Back to `cw_min` after a success or a drop.
    pub fn reset_cw(&mut self) {
        self.cw = self.params.cw_min;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::rng::rng_stream;

    fn us(v: u64) -> SimTime {
        SimTime::from_micros(v)
    }

    #[test]
    fn backoff_range_and_errors() {
        let p = MacParams::default();
        let mut rng = rng_stream(1, NodeId(1), "backoff");
        let mut seen = [false; 16];
        for _ in 0..10_000 {
            let v = backoff_draw(15, &p, &mut rng).unwrap();
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert!(matches!(backoff_draw(0, &p, &mut rng), Err(Error::ContentionWindow { .. })));
        assert!(backoff_draw(2047, &p, &mut rng).is_err());
    }

    #[test]
    fn backoff_replays() {
        let p = MacParams::default();
        let draw = |seed| {
            let mut rng = rng_stream(seed, NodeId(1), "backoff");
            (0..64).map(|_| backoff_draw(1023, &p, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn window_doubling() {
        let p = MacParams::default();
        assert_eq!(next_cw(15, &p), 31);
        assert_eq!(next_cw(511, &p), 1023);
        assert_eq!(next_cw(1023, &p), 1023);
        let mut cw = p.cw_min;
        for k in 1..12u32 {
            cw = next_cw(cw, &p);
            assert_eq!(cw, (2u32.pow(k) * (p.cw_min + 1) - 1).min(p.cw_max));
        }
    }

    #[test]
    fn ack_timeouts() {
        let phy = PhyParams::default();
        let ch = ChannelParams::default();
        let delta = Duration::from_nanos(2 * 172);
        let to = |i| ack_timeout_for(Mcs::new(i).unwrap(), &phy, &ch);
        assert_eq!(to(7), Duration::from_micros(16 + 28 + 9) + delta);
        assert_eq!(to(0), Duration::from_micros(16 + 44 + 9) + delta);
    }

    #[test]
    fn ack_frame_follows_rate_mapping() {
        let data = Frame {
            kind: FrameKind::Data,
            src: NodeId(1),
            dst: NodeId(0),
            psdu_bytes: 86,
            mcs: Mcs::HIGHEST,
            seq: 9,
            gen_time: SimTime::ZERO,
        };
        let ack = data.ack();
        assert_eq!((ack.src, ack.dst), (NodeId(0), NodeId(1)));
        assert_eq!(ack.mcs.entry().data_rate_mbps, 24);
        assert_eq!(ack.psdu_bytes, 14);
        let slow = Frame { mcs: Mcs::LOWEST, ..data }.ack();
        assert_eq!(slow.mcs, Mcs::LOWEST);
    }

    #[test]
    fn chain_walk() {
        let m = |i| Mcs::new(i).unwrap();
        let chain = RetryChain::new(vec![(m(7), 3), (m(5), 2), (m(2), 2), (m(0), 1)]);
        assert_eq!(chain.total_attempts(), 8);
        let walked: Vec<_> = (0..9).map(|a| chain.rate_for_attempt(a).map(Mcs::index)).collect();
        assert_eq!(
            walked,
            [Some(7), Some(7), Some(7), Some(5), Some(5), Some(2), Some(2), Some(0), None]
        );
        assert_eq!(chain.attempts().count(), 8);
    }

    #[test]
    fn carrier_sense_geometry() {
        let phy = PhyParams::default();
        let ch = ChannelParams::default();
        let frame = Frame {
            kind: FrameKind::Data,
            src: NodeId(2),
            dst: NodeId(0),
            psdu_bytes: 1536,
            mcs: Mcs::new(4).unwrap(),
            seq: 0,
            gen_time: SimTime::ZERO,
        };
        let tx = |pos| OnAirFrame {
            frame,
            tx_start: us(0),
            tx_end: us(536),
            tx_power_dbm: phy.tx_power_dbm,
            tx_position: pos,
        };
        let ap = [tx(Point::ORIGIN)];
        let int = [tx(Point::new(-40.0, 2.0))];
        let t = us(100);
        let cs = |x: f64, frames: &[OnAirFrame]| carrier_sense(Point::new(x, 0.0), t, frames, &phy, &ch);
        assert_eq!(cs(5.0, &ap), ChannelState::Busy);
        assert_eq!(cs(20.0, &int), ChannelState::Idle);
        assert_eq!(cs(10.0, &int), ChannelState::Busy);
        for d in 1..=10 {
            assert_eq!(cs(d as f64, &int), ChannelState::Busy, "{d} m");
        }
        for d in 12..=51 {
            assert_eq!(cs(d as f64, &int), ChannelState::Idle, "{d} m");
        }
        // Outside the frame's arrival window the medium is idle.
        assert_eq!(carrier_sense(Point::new(5.0, 0.0), us(600), &ap, &phy, &ch), ChannelState::Idle);
    }

    #[test]
    fn countdown_waits_difs_then_slots() {
        let phy = PhyParams::default();
        let mut dcf = Dcf::new(MacParams::default(), &phy);
        let mut rng = rng_stream(3, NodeId(1), "backoff");
        let expiry = dcf.request_access(us(1000), &mut rng).unwrap();
        let slots = dcf.remaining_slots().unwrap() as u64;
        assert_eq!(expiry, us(1000 + 34 + 9 * slots));
    }

    #[test]
    fn countdown_freezes_and_resumes() {
        let phy = PhyParams::default();
        let mut dcf = Dcf::new(MacParams::default(), &phy);
        // Force a known window: retry until the draw is large enough.
        let mut rng = rng_stream(11, NodeId(1), "backoff");
        let mut expiry;
        loop {
            expiry = dcf.request_access(us(0), &mut rng).unwrap();
            if dcf.remaining_slots().unwrap() >= 5 {
                break;
            }
        }
        let slots = dcf.remaining_slots().unwrap();
        assert_eq!(expiry, us(34 + 9 * slots as u64));
        let token = dcf.token();
        // Busy 2.5 slots into the countdown: two whole slots elapsed.
        dcf.on_medium_busy(us(34 + 22));
        assert_ne!(dcf.token(), token);
        assert_eq!(dcf.remaining_slots(), Some(slots - 2));
        assert_eq!(dcf.expiry(), None);
        // Nested busy sources only resume after the last one clears.
        dcf.on_medium_busy(us(60));
        assert_eq!(dcf.on_medium_idle(us(100)), None);
        let resumed = dcf.on_medium_idle(us(200)).unwrap();
        assert_eq!(resumed, us(200 + 34 + 9 * (slots as u64 - 2)));
    }

    #[test]
    fn busy_during_difs_consumes_nothing() {
        let phy = PhyParams::default();
        let mut dcf = Dcf::new(MacParams::default(), &phy);
        let mut rng = rng_stream(2, NodeId(1), "backoff");
        dcf.request_access(us(0), &mut rng);
        let slots = dcf.remaining_slots().unwrap();
        dcf.on_medium_busy(us(20));
        assert_eq!(dcf.remaining_slots(), Some(slots));
    }

    #[test]
    fn request_while_busy_waits_for_idle() {
        let phy = PhyParams::default();
        let mut dcf = Dcf::new(MacParams::default(), &phy);
        let mut rng = rng_stream(2, NodeId(1), "backoff");
        dcf.on_medium_busy(us(0));
        assert_eq!(dcf.request_access(us(10), &mut rng), None);
        let slots = dcf.remaining_slots().unwrap() as u64;
        assert_eq!(dcf.on_medium_idle(us(50)), Some(us(50 + 34 + 9 * slots)));
    }
}
