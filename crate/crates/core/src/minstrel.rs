//! Minstrel rate adaptation.
//!
//! Each station keeps per-rate success statistics over short update
//! intervals, folds them into an EWMA, and ranks rates by expected
//! throughput (`ewma_prob / perfect_tx_time`). Normal packets go out on a
//! retry chain built from the ranking; a fixed fraction of packets instead
//! carries one look-around attempt at another rate so that the statistics
//! keep tracking a changing channel.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::mac::RetryChain;
use crate::phy::{frame_duration, Mcs};
use crate::{Error, Result, SimTime};

#[derive(Debug, Clone, PartialEq)]
pub struct MinstrelParams {
    pub update_interval: Duration,
    /// Weight kept by the old average at each update.
    pub ewma_weight: f64,
    pub sampling_fraction: f64,
    /// Attempts given to max_tp, max_tp2, max_prob and the lowest rate.
    pub segments: [u32; 4],
}

impl Default for MinstrelParams {
    fn default() -> Self {
        MinstrelParams {
            update_interval: Duration::from_millis(100),
            ewma_weight: 0.75,
            sampling_fraction: 0.10,
            segments: Self::AIRTIME_SEGMENTS,
        }
    }
}

impl MinstrelParams {
    /// Evenly spread chain: three tries at max_tp, then two, two and one.
    pub const SPREAD_SEGMENTS: [u32; 4] = [3, 2, 2, 1];
    /// Segments as a 6 ms per-rate airtime budget sizes them for short
    /// frames, cut to an 8-attempt budget: max_tp keeps retrying with a
    /// doubling window for six attempts before falling back.
    pub const AIRTIME_SEGMENTS: [u32; 4] = [6, 1, 0, 1];

    pub fn validate(&self, attempt_budget: u32) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ewma_weight) || !(0.0..=1.0).contains(&self.sampling_fraction) {
            return Err(Error::InvalidScenario("minstrel weights must lie in [0, 1]".into()));
        }
        if self.update_interval.is_zero() {
            return Err(Error::InvalidScenario("minstrel update interval must be positive".into()));
        }
        let total: u32 = self.segments.iter().sum();
        if total != attempt_budget || self.segments[0] == 0 || self.segments[1] + self.segments[3] < 2 {
            return Err(Error::InvalidScenario(format!(
                "minstrel segments {:?} must sum to the attempt budget {attempt_budget}",
                self.segments
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateState {
    pub attempts_interval: u64,
    pub successes_interval: u64,
    pub attempts_total: u64,
    pub successes_total: u64,
    pub ewma_prob: f64,
    /// Success probability per microsecond of airtime.
    pub est_throughput: f64,
    pub perfect_tx_time: Duration,
}

impl RateState {
    fn new(perfect_tx_time: Duration) -> Self {
        RateState {
            attempts_interval: 0,
            successes_interval: 0,
            attempts_total: 0,
            successes_total: 0,
            ewma_prob: 0.0,
            est_throughput: 0.0,
            perfect_tx_time,
        }
    }

    fn credit(&mut self, attempts: u64, successes: u64) {
        self.attempts_interval += attempts;
        self.successes_interval += successes;
        self.attempts_total += attempts;
        self.successes_total += successes;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ranking {
    pub max_tp: Mcs,
    pub max_tp2: Mcs,
    pub max_prob: Mcs,
}

/// Argmax over `score`, ties going to the lower index.
fn best_by(rates: &[RateState], skip: Option<Mcs>, score: impl Fn(&RateState) -> f64) -> Mcs {
    let mut best: Option<(Mcs, f64)> = None;
    for (mcs, rate) in Mcs::all().zip(rates) {
        if Some(mcs) == skip {
            continue;
        }
        let s = score(rate);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((mcs, s));
        }
    }
    best.expect("at least two rates").0
}

pub fn rank_rates(rates: &[RateState]) -> Ranking {
    let max_tp = best_by(rates, None, |r| r.est_throughput);
    Ranking {
        max_tp,
        max_tp2: best_by(rates, Some(max_tp), |r| r.est_throughput),
        max_prob: best_by(rates, None, |r| r.ewma_prob),
    }
}

#[derive(Debug, Clone)]
pub struct MinstrelState {
    params: MinstrelParams,
    rates: Vec<RateState>,
    ranking: Ranking,
    last_update: Option<SimTime>,
    sample_order: Vec<Mcs>,
    sample_cursor: usize,
}

impl MinstrelState {
    /// `reference_len` is the PSDU length used for each rate's perfect
    /// transmission time.
    pub fn new(params: MinstrelParams, reference_len: u32) -> Self {
        let rates: Vec<_> = Mcs::all()
            .map(|m| RateState::new(frame_duration(m.entry(), reference_len)))
            .collect();
        let ranking = rank_rates(&rates);
        let sample_order = Mcs::all().filter(|&m| m != ranking.max_tp).collect();
        MinstrelState {
            params,
            rates,
            ranking,
            last_update: None,
            sample_order,
            sample_cursor: 0,
        }
    }

    pub fn params(&self) -> &MinstrelParams {
        &self.params
    }

    pub fn rates(&self) -> &[RateState] {
        &self.rates
    }

    pub fn rate(&self, mcs: Mcs) -> &RateState {
        &self.rates[mcs.index()]
    }

    pub fn ranking(&self) -> Ranking {
        self.ranking
    }

    pub fn last_update(&self) -> Option<SimTime> {
        self.last_update
    }

    /// Folds the interval counters into the EWMA, re-ranks, and reshuffles
    /// the look-around order. Runs once per update interval.
    pub fn update_stats<R: Rng + ?Sized>(&mut self, now: SimTime, rng: &mut R) {
        let w = self.params.ewma_weight;
        for rate in &mut self.rates {
            if rate.attempts_interval > 0 {
                let p = rate.successes_interval as f64 / rate.attempts_interval as f64;
                rate.ewma_prob = (w * rate.ewma_prob + (1.0 - w) * p).clamp(0.0, 1.0);
            }
            rate.attempts_interval = 0;
            rate.successes_interval = 0;
            rate.est_throughput = rate.ewma_prob / (rate.perfect_tx_time.as_nanos() as f64 * 1e-3);
        }
        self.ranking = rank_rates(&self.rates);
        self.last_update = Some(now);

        let max_tp = self.ranking.max_tp;
        self.sample_order.clear();
        self.sample_order.extend(Mcs::all().filter(|&m| m != max_tp));
        self.sample_order.shuffle(rng);
    }

    pub fn should_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() < self.params.sampling_fraction
    }

    /// Next look-around rate, round-robin over the current shuffled order.
    pub fn next_sample_rate(&mut self) -> Mcs {
        let mcs = self.sample_order[self.sample_cursor % self.sample_order.len()];
        self.sample_cursor = (self.sample_cursor + 1) % self.sample_order.len();
        mcs
    }

    /// Retry chain for a packet; `sample` carries the look-around rate when
    /// this packet probes.
    ///
    /// Before the first statistics update everything goes at the lowest rate.
    pub fn build_chain(&self, sample: Option<Mcs>) -> RetryChain {
        let [tp, tp2, prob, low] = self.params.segments;
        let budget = tp + tp2 + prob + low;
        if self.last_update.is_none() {
            return RetryChain::new(vec![(Mcs::LOWEST, budget)]);
        }
        let r = self.ranking;
        match sample {
            None => RetryChain::new(vec![
                (r.max_tp, tp),
                (r.max_tp2, tp2),
                (r.max_prob, prob),
                (Mcs::LOWEST, low),
            ]),
            Some(s) => {
                debug_assert_ne!(s, r.max_tp);
                let probe = (s, 1);
                let best = (r.max_tp, tp);
                // A probe that could beat max_tp goes first; a slower one
                // only runs if max_tp already failed.
                let (first, second) = if self.rate(s).perfect_tx_time < self.rate(r.max_tp).perfect_tx_time {
                    (probe, best)
                } else {
                    (best, probe)
                };
                RetryChain::new(vec![first, second, (r.max_prob, prob), (Mcs::LOWEST, tp2 + low - 1)])
            }
        }
    }

    /// Chooses the chain for the next packet, drawing the look-around
    /// decision from `rng`. Returns whether the packet probes.
    pub fn chain_for_packet<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (RetryChain, bool) {
        if self.last_update.is_none() {
            return (self.build_chain(None), false);
        }
        if self.should_sample(rng) {
            let s = self.next_sample_rate();
            (self.build_chain(Some(s)), true)
        } else {
            (self.build_chain(None), false)
        }
    }

    /// Credits a finished packet: one attempt per rate walked through the
    /// chain, and a success on the last one if the packet was acknowledged.
    pub fn record_result(&mut self, chain: &RetryChain, attempts_used: u32, acked: bool) {
        debug_assert!(attempts_used >= 1 && attempts_used <= chain.total_attempts());
        let mut left = attempts_used;
        for &(mcs, n) in chain.segments() {
            if left == 0 {
                break;
            }
            let used = n.min(left);
            left -= used;
            let success = acked && left == 0;
            self.rates[mcs.index()].credit(used.into(), success.into());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::rng::rng_stream;
    use crate::mac::NodeId;

    fn m(i: usize) -> Mcs {
        Mcs::new(i).unwrap()
    }

    fn state() -> MinstrelState {
        MinstrelState::new(
            MinstrelParams {
                segments: MinstrelParams::SPREAD_SEGMENTS,
                ..Default::default()
            },
            86,
        )
    }

    fn set(state: &mut MinstrelState, mcs: Mcs, p: f64) {
        let r = &mut state.rates[mcs.index()];
        r.ewma_prob = p;
        r.est_throughput = p / (r.perfect_tx_time.as_nanos() as f64 * 1e-3);
    }

    fn ranked(mut s: MinstrelState) -> MinstrelState {
        s.ranking = rank_rates(&s.rates);
        s.last_update = Some(SimTime::ZERO);
        s
    }

    #[test]
    fn ewma_single_step() {
        let mut s = state();
        let mut rng = rng_stream(1, NodeId(1), "minstrel");
        s.rates[3].ewma_prob = 0.5;
        s.rates[3].credit(4, 4);
        s.update_stats(SimTime::ZERO, &mut rng);
        assert!((s.rates[3].ewma_prob - 0.625).abs() < 1e-12);
        // Idle rates keep their average and the interval counters reset.
        s.rates[5].ewma_prob = 0.4;
        s.update_stats(SimTime::ZERO, &mut rng);
        assert_eq!(s.rates[5].ewma_prob, 0.4);
        assert_eq!(s.rates[3].attempts_interval, 0);
        assert_eq!(s.rates[3].attempts_total, 4);
    }

    #[test]
    fn ewma_closed_form() {
        let mut s = state();
        let mut rng = rng_stream(1, NodeId(1), "minstrel");
        for k in 1..=30 {
            s.rates[2].credit(1, 1);
            s.update_stats(SimTime::ZERO, &mut rng);
            let closed = 1.0 - 0.75f64.powi(k);
            assert!((s.rates[2].ewma_prob - closed).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn ranking_by_throughput() {
        // Two synthetic rates: A (p 0.9, 100 µs) and B (p 0.5, 40 µs).
        let mut rates: Vec<RateState> = Mcs::all().map(|_| RateState::new(Duration::from_micros(200))).collect();
        rates[1] = RateState {
            ewma_prob: 0.9,
            est_throughput: 0.9 / 100.0,
            ..RateState::new(Duration::from_micros(100))
        };
        rates[6] = RateState {
            ewma_prob: 0.5,
            est_throughput: 0.5 / 40.0,
            ..RateState::new(Duration::from_micros(40))
        };
        let r = rank_rates(&rates);
        assert_eq!(r.max_tp, m(6));
        assert_eq!(r.max_tp2, m(1));
        assert_eq!(r.max_prob, m(1));
    }

    #[test]
    fn ranking_ties_go_low() {
        let s = ranked(state());
        assert_eq!(s.ranking.max_tp, m(0));
        assert_eq!(s.ranking.max_tp2, m(1));
        assert_eq!(s.ranking.max_prob, m(0));
        // 48 and 54 Mb/s share the same 86 B airtime.
        let mut s = state();
        set(&mut s, m(6), 1.0);
        set(&mut s, m(7), 1.0);
        let s = ranked(s);
        assert_eq!(s.ranking.max_tp, m(6));
        assert_eq!(s.ranking.max_tp2, m(7));
    }

    #[test]
    fn single_nonzero_rate() {
        let mut s = state();
        set(&mut s, m(4), 0.8);
        let s = ranked(s);
        assert_eq!(s.ranking.max_tp, m(4));
        assert_eq!(s.ranking.max_prob, m(4));
        assert_eq!(s.ranking.max_tp2, m(0));
    }

    #[test]
    fn chains() {
        let mut s = state();
        set(&mut s, m(5), 1.0);
        set(&mut s, m(3), 0.9);
        let s = ranked(s);
        let normal = s.build_chain(None);
        assert_eq!(normal.segments(), [(m(5), 3), (m(3), 2), (m(5), 2), (m(0), 1)]);
        assert_eq!(normal.total_attempts(), 8);

        let slower = s.build_chain(Some(m(2)));
        assert_eq!(slower.segments(), [(m(5), 3), (m(2), 1), (m(5), 2), (m(0), 2)]);
        let faster = s.build_chain(Some(m(7)));
        assert_eq!(faster.segments()[0], (m(7), 1));
        assert_eq!(faster.segments()[1], (m(5), 3));
        assert_eq!(faster.total_attempts(), 8);
    }

    #[test]
    fn default_chains_fit_the_budget() {
        let mut s = MinstrelState::new(MinstrelParams::default(), 86);
        set(&mut s, m(5), 1.0);
        set(&mut s, m(3), 0.9);
        let s = ranked(s);
        assert_eq!(
            s.build_chain(None).segments(),
            [(m(5), 6), (m(3), 1), (m(5), 0), (m(0), 1)]
        );
        assert_eq!(s.build_chain(Some(m(7))).total_attempts(), 8);
        let probe = s.build_chain(Some(m(1)));
        assert_eq!(probe.attempts().collect::<Vec<_>>()[6], m(1));
        assert_eq!(probe.rate_for_attempt(7), Some(m(0)));
    }

    #[test]
    fn cold_start_chain() {
        let s = state();
        assert_eq!(s.build_chain(None).segments(), [(Mcs::LOWEST, 8)]);
    }

    #[test]
    fn record_walks_chain() {
        let mut s = state();
        set(&mut s, m(7), 1.0);
        set(&mut s, m(5), 0.9);
        let mut s = ranked(s);
        let chain = s.build_chain(None);

        s.record_result(&chain, 1, true);
        assert_eq!((s.rates[7].attempts_interval, s.rates[7].successes_interval), (1, 1));

        let mut t = s.clone();
        t.record_result(&chain, 4, true);
        assert_eq!((t.rates[7].attempts_interval - 1, t.rates[7].successes_interval - 1), (3, 0));
        assert_eq!((t.rates[5].attempts_interval, t.rates[5].successes_interval), (1, 1));

        let mut d = state();
        d.record_result(&chain, 8, false);
        // Chain is [(54,3), (36,2), (54,2), (6,1)]: max_prob is 54 Mb/s too.
        assert_eq!(d.rates[7].attempts_interval, 5);
        assert_eq!(d.rates[5].attempts_interval, 2);
        assert_eq!(d.rates[0].attempts_interval, 1);
        assert!(d.rates.iter().all(|r| r.successes_interval == 0));
    }

    #[test]
    fn sampling_rate() {
        let s = state();
        let mut rng = rng_stream(42, NodeId(1), "minstrel");
        let n = 1_000_000;
        let hits = (0..n).filter(|_| s.should_sample(&mut rng)).count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.10).abs() < 0.003, "{rate}");

        let never = MinstrelState::new(MinstrelParams { sampling_fraction: 0.0, ..Default::default() }, 86);
        let always = MinstrelState::new(MinstrelParams { sampling_fraction: 1.0, ..Default::default() }, 86);
        for _ in 0..1000 {
            assert!(!never.should_sample(&mut rng));
            assert!(always.should_sample(&mut rng));
        }
    }

    #[test]
    fn sample_order_excludes_max_tp() {
        let mut s = state();
        let mut rng = rng_stream(4, NodeId(1), "minstrel");
        s.rates[3].credit(10, 10);
        s.update_stats(SimTime::ZERO, &mut rng);
        assert_eq!(s.ranking.max_tp, m(3));
        let probes: Vec<Mcs> = (0..7).map(|_| s.next_sample_rate()).collect();
        assert!(!probes.contains(&m(3)));
        let mut sorted = probes.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 7);
    }
}
