use std::collections::VecDeque;
use std::time::Duration;

use crate::channel::{resolve_reception, ChannelParams, OnAirFrame, Point, Reception};
use crate::harness::metrics::{BinStats, PacketOutcome};
use crate::mac::{ack_timeout_for, Dcf, Frame, FrameKind, NodeId, RetryChain};
use crate::minstrel::MinstrelState;
use crate::mobility::{bin_of, Trajectory};
use crate::phy::{ErrorModel, Mcs, PhyParams, ACK_PSDU_BYTES, NUM_MCS};
use crate::traffic::{psdu_bytes, BurstySource, PeriodicSource};
use crate::{Result, SimTime};

use super::queue::EventQueue;
use super::rng::{rng_stream, SimRng};
use super::scenario::ScenarioConfig;

const AP: usize = 0;
const SUT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    AccessPoint,
    Sut,
    Interferer,
}

/// Everything that can happen in a run. `node` indexes the node table
/// (0 = AP, 1 = SUT, 2 = INT); `tx` identifies a transmission on the medium.
#[derive(Debug, Clone, Copy)]
pub enum Event {
    PacketGenerated { node: usize },
    BackoffExpire { node: usize, token: u64 },
    /// Starts a response frame without sensing the medium.
    TxStart { node: usize, frame: Frame },
    TxEnd { node: usize, tx: u64 },
    /// Leading edge of `tx` reaches `node`.
    RxStart { node: usize, tx: u64, sensed: bool, lockable: bool },
    /// Trailing edge of `tx` reaches `node`.
    RxResolve { node: usize, tx: u64, sensed: bool },
    AckTimeout { node: usize, token: u64 },
    StatsUpdate { node: usize },
    /// The SUT crosses a bin boundary.
    TrajectoryCheckpoint { index: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceCounts {
    pub node: NodeId,
    pub role: Role,
    pub generated: u64,
    pub acked: u64,
    pub dropped: u64,
    pub in_flight: u64,
}

/// Minstrel state of the SUT right after one update.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: SimTime,
    pub ewma: [f64; NUM_MCS],
    pub max_tp: Mcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawOutcome {
    Acked { at: SimTime },
    Dropped { at: SimTime },
    InFlight,
}

/// One SUT packet, as logged with `raw_log`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawRecord {
    pub seq: u64,
    pub gen_time: SimTime,
    /// Bin at the first attempt; `None` if the packet never reached the air.
    pub bin: Option<u32>,
    pub attempts: u32,
    pub outcome: RawOutcome,
}

impl RawRecord {
    pub fn packet_outcome(&self) -> PacketOutcome {
        match self.outcome {
            RawOutcome::Acked { at } => PacketOutcome::Acked {
                latency: at - self.gen_time,
            },
            RawOutcome::Dropped { .. } => PacketOutcome::Dropped,
            RawOutcome::InFlight => PacketOutcome::InFlight,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Indexed by bin.
    pub bins: Vec<BinStats>,
    /// Seconds the SUT spent in each bin.
    pub dwell_s: Vec<f64>,
    pub sources: Vec<SourceCounts>,
    pub sim_end: SimTime,
    pub events_processed: u64,
    pub trace: Vec<TraceRow>,
    pub raw: Vec<RawRecord>,
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    seq: u64,
    gen_time: SimTime,
}

#[derive(Debug)]
struct Service {
    packet: Packet,
    chain: RetryChain,
    attempt: u32,
    bin: Option<u32>,
}

enum Source {
    Silent,
    Periodic { src: PeriodicSource, k: u64 },
    Bursty { src: BurstySource, left: u32, rng: SimRng },
}

struct Node {
    role: Role,
    trajectory: Trajectory,
    psdu_bytes: u32,
    dcf: Dcf,
    minstrel: Option<MinstrelState>,
    source: Source,
    queue: VecDeque<Packet>,
    service: Option<Service>,
    transmitting: bool,
    locked: Option<u64>,
    awaiting_ack: Option<u64>,
    ack_token: u64,
    backoff_rng: SimRng,
    minstrel_rng: SimRng,
    reception_rng: SimRng,
    next_seq: u64,
    generated: u64,
    acked: u64,
    dropped: u64,
}

impl Node {
    fn position(&self, t: SimTime) -> Point {
        self.trajectory.position_at(t.as_secs_f64())
    }

    fn id(idx: usize) -> NodeId {
        NodeId(idx as u32)
    }
}

/// Frames still relevant to some pending reception, in transmission order.
struct Medium {
    frames: VecDeque<OnAirFrame>,
    first_id: u64,
    /// Frames ending this long before now can no longer overlap anything
    /// still being received.
    horizon: Duration,
}

impl Medium {
    fn push(&mut self, frame: OnAirFrame, now: SimTime) -> u64 {
        while let Some(front) = self.frames.front() {
            if front.tx_end + self.horizon < now {
                self.frames.pop_front();
                self.first_id += 1;
            } else {
                break;
            }
        }
        self.frames.push_back(frame);
        self.first_id + self.frames.len() as u64 - 1
    }

    fn get(&self, id: u64) -> &OnAirFrame {
        &self.frames[(id - self.first_id) as usize]
    }
}

/// A built scenario, ready to run.
pub struct Simulation {
    phy: PhyParams,
    channel: ChannelParams,
    errors: ErrorModel,
    update_interval: Duration,
    nodes: Vec<Node>,
    medium: Medium,
    queue: EventQueue<Event>,
    end: SimTime,
    warmup_until: SimTime,
    bins: Vec<BinStats>,
    dwell_s: Vec<f64>,
    crossings: Vec<f64>,
    last_checkpoint: SimTime,
    trace: Option<Vec<TraceRow>>,
    raw: Option<Vec<RawRecord>>,
    scratch: Vec<OnAirFrame>,
    events_processed: u64,
}

impl Simulation {
    pub(super) fn new(config: &ScenarioConfig) -> Result<Simulation> {
        let p = &config.params;
        let seed = config.seed;
        let end = SimTime::from_secs_f64(config.duration_s()?);
        let sut_traj = config.sut_trajectory()?;

        let node = |idx: usize, role: Role, trajectory: Trajectory, psdu: u32, source: Source| Node {
            role,
            trajectory,
            psdu_bytes: psdu,
            dcf: Dcf::new(p.mac.clone(), &p.phy),
            minstrel: (role != Role::AccessPoint).then(|| MinstrelState::new(p.minstrel.clone(), psdu)),
            source,
            queue: VecDeque::new(),
            service: None,
            transmitting: false,
            locked: None,
            awaiting_ack: None,
            ack_token: 0,
            backoff_rng: rng_stream(seed, Node::id(idx), "backoff"),
            minstrel_rng: rng_stream(seed, Node::id(idx), "minstrel"),
            reception_rng: rng_stream(seed, Node::id(idx), "reception"),
            next_seq: 0,
            generated: 0,
            acked: 0,
            dropped: 0,
        };

        let sut_psdu = psdu_bytes(p.sut_traffic.payload);
        let int_psdu = psdu_bytes(p.int_traffic.payload);
        let mut nodes = vec![
            node(AP, Role::AccessPoint, Trajectory::Static(p.geometry.ap), ACK_PSDU_BYTES, Source::Silent),
            node(
                SUT,
                Role::Sut,
                sut_traj.clone(),
                sut_psdu,
                Source::Periodic {
                    src: p.sut_traffic.clone(),
                    k: 0,
                },
            ),
        ];
        if let Some(pos) = config.interferer_position() {
            let idx = nodes.len();
            nodes.push(node(
                idx,
                Role::Interferer,
                Trajectory::Static(pos),
                int_psdu,
                Source::Bursty {
                    src: p.int_traffic.clone(),
                    left: 0,
                    rng: rng_stream(seed, Node::id(idx), "traffic"),
                },
            ));
        }

        let longest = sut_psdu.max(int_psdu).max(ACK_PSDU_BYTES);
        let horizon = p.phy.airtime(Mcs::LOWEST.entry(), longest)
            + 2 * p.channel.propagation_delay(p.channel.d_max_m.max(1000.0))
            + Duration::from_millis(1);

        let n_bins = bin_of(p.geometry.track_max.max(config.static_position)) as usize + 1;
        let crossings = match sut_traj {
            Trajectory::Static(_) => Vec::new(),
            Trajectory::Triangle { x_min, x_max, .. } => {
                // Unfolded distances of every bin boundary within one round trip.
                let span = x_max - x_min;
                let mut s: Vec<f64> = (0..=n_bins)
                    .map(|k| k as f64 + 0.5)
                    .filter(|&b| b > x_min && b < x_max)
                    .flat_map(|b| [b - x_min, 2.0 * span - (b - x_min)])
                    .collect();
                s.sort_by(f64::total_cmp);
                s
            }
        };

        let mut sim = Simulation {
            phy: p.phy.clone(),
            channel: p.channel.clone(),
            errors: p.errors.clone(),
            update_interval: p.minstrel.update_interval,
            nodes,
            medium: Medium {
                frames: VecDeque::new(),
                first_id: 0,
                horizon,
            },
            queue: EventQueue::new(),
            end,
            warmup_until: if p.discard_warmup {
                SimTime::ZERO + p.minstrel.update_interval
            } else {
                SimTime::ZERO
            },
            bins: (0..n_bins as u32).map(BinStats::new).collect(),
            dwell_s: vec![0.0; n_bins],
            crossings,
            last_checkpoint: SimTime::ZERO,
            trace: config.trace_minstrel.then(Vec::new),
            raw: config.raw_log.then(Vec::new),
            scratch: Vec::new(),
            events_processed: 0,
        };
        sim.prime();
        Ok(sim)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn end_time(&self) -> SimTime {
        self.end
    }

    fn prime(&mut self) {
        for idx in 0..self.nodes.len() {
            if self.nodes[idx].minstrel.is_some() {
                self.schedule(SimTime::ZERO + self.update_interval, Event::StatsUpdate { node: idx });
            }
            let first = match &mut self.nodes[idx].source {
                Source::Silent => None,
                Source::Periodic { src, .. } => Some(src.periodic_next(0)),
                Source::Bursty { src, left, rng } => {
                    let burst = src.burst_schedule_next(rng);
                    *left = burst.count;
                    Some(SimTime::ZERO + burst.gap)
                }
            };
            if let Some(t) = first {
                self.schedule(t, Event::PacketGenerated { node: idx });
            }
        }
        if !self.crossings.is_empty() {
            self.schedule_checkpoint(0);
        }
    }

    /// Drops events at or past the end of the run.
    fn schedule(&mut self, t: SimTime, event: Event) {
        if t < self.end {
            self.queue.schedule(t, event);
        }
    }

    fn checkpoint_time(&self, index: u64) -> SimTime {
        let n = self.crossings.len() as u64;
        let Trajectory::Triangle { speed, x_min, x_max, .. } = self.nodes[SUT].trajectory else {
            unreachable!("checkpoints only exist for moving SUTs");
        };
        let s = (index / n) as f64 * 2.0 * (x_max - x_min) + self.crossings[(index % n) as usize];
        SimTime::from_secs_f64(s / speed)
    }

    fn schedule_checkpoint(&mut self, index: u64) {
        let t = self.checkpoint_time(index);
        self.schedule(t, Event::TrajectoryCheckpoint { index });
    }

    /// Credits the SUT's presence between the previous checkpoint and `now`.
    fn accrue_dwell(&mut self, now: SimTime) {
        if now <= self.last_checkpoint {
            return;
        }
        let mid = SimTime::from_nanos((self.last_checkpoint.as_nanos() + now.as_nanos()) / 2);
        let bin = bin_of(self.nodes[SUT].position(mid).x) as usize;
        let bin = bin.min(self.dwell_s.len() - 1);
        self.dwell_s[bin] += (now - self.last_checkpoint).as_secs_f64();
        self.last_checkpoint = now;
    }

    /// Processes every event before the end time and returns the
    /// aggregated statistics.
    pub fn run(mut self) -> RunOutput {
        while let Some((now, event)) = self.queue.pop_next() {
            self.events_processed += 1;
            self.handle(now, event);
        }
        self.finish()
    }

    fn handle(&mut self, now: SimTime, event: Event) {
        match event {
            Event::PacketGenerated { node } => self.on_generated(node, now),
            Event::BackoffExpire { node, token } => {
                let n = &mut self.nodes[node];
                if n.dcf.token() == token && n.dcf.is_contending() {
                    n.dcf.begin_transmission();
                    self.start_data_attempt(node, now);
                }
            }
            Event::TxStart { node, frame } => self.transmit(node, frame, now),
            Event::TxEnd { node, tx } => self.on_tx_end(node, tx, now),
            Event::RxStart {
                node,
                tx,
                sensed,
                lockable,
            } => {
                let n = &mut self.nodes[node];
                if sensed {
                    n.dcf.on_medium_busy(now);
                }
                if lockable && !n.transmitting && n.locked.is_none() {
                    n.locked = Some(tx);
                }
            }
            Event::RxResolve { node, tx, sensed } => {
                if sensed {
                    let expiry = self.nodes[node].dcf.on_medium_idle(now);
                    self.schedule_backoff(node, expiry);
                }
                if self.nodes[node].locked == Some(tx) {
                    self.nodes[node].locked = None;
                    self.on_frame_received(node, tx, now);
                }
            }
            Event::AckTimeout { node, token } => {
                if self.nodes[node].awaiting_ack == Some(token) {
                    self.nodes[node].awaiting_ack = None;
                    self.on_attempt_failed(node, now);
                }
            }
            Event::StatsUpdate { node } => {
                let n = &mut self.nodes[node];
                let m = n.minstrel.as_mut().expect("stats update for a node without Minstrel");
                m.update_stats(now, &mut n.minstrel_rng);
                if node == SUT {
                    if let Some(trace) = &mut self.trace {
                        let mut ewma = [0.0; NUM_MCS];
                        for (e, r) in ewma.iter_mut().zip(m.rates()) {
                            *e = r.ewma_prob;
                        }
                        trace.push(TraceRow {
                            time: now,
                            ewma,
                            max_tp: m.ranking().max_tp,
                        });
                    }
                }
                self.schedule(now + self.update_interval, Event::StatsUpdate { node });
            }
            Event::TrajectoryCheckpoint { index } => {
                self.accrue_dwell(now);
                self.schedule_checkpoint(index + 1);
            }
        }
    }

    fn schedule_backoff(&mut self, node: usize, expiry: Option<SimTime>) {
        if let Some(t) = expiry {
            let token = self.nodes[node].dcf.token();
            self.schedule(t, Event::BackoffExpire { node, token });
        }
    }

    fn on_generated(&mut self, node: usize, now: SimTime) {
        let n = &mut self.nodes[node];
        n.queue.push_back(Packet {
            seq: n.next_seq,
            gen_time: now,
        });
        n.next_seq += 1;
        n.generated += 1;
        let next = match &mut n.source {
            Source::Silent => None,
            Source::Periodic { src, k } => {
                *k += 1;
                Some(src.periodic_next(*k))
            }
            Source::Bursty { src, left, rng } => {
                *left -= 1;
                if *left > 0 {
                    Some(now + src.intra_spacing)
                } else {
                    let burst = src.burst_schedule_next(rng);
                    *left = burst.count;
                    Some(now + burst.gap)
                }
            }
        };
        if let Some(t) = next {
            self.schedule(t, Event::PacketGenerated { node });
        }
        if self.nodes[node].service.is_none() {
            self.start_service(node, now);
        }
    }

    /// Takes the head-of-line packet into service and starts contending.
    fn start_service(&mut self, node: usize, now: SimTime) {
        let n = &mut self.nodes[node];
        let Some(packet) = n.queue.pop_front() else {
            return;
        };
        let minstrel = n.minstrel.as_mut().expect("only stations originate data");
        let (chain, _) = minstrel.chain_for_packet(&mut n.minstrel_rng);
        n.service = Some(Service {
            packet,
            chain,
            attempt: 0,
            bin: None,
        });
        let expiry = n.dcf.request_access(now, &mut n.backoff_rng);
        self.schedule_backoff(node, expiry);
    }

    fn start_data_attempt(&mut self, node: usize, now: SimTime) {
        let pos = self.nodes[node].position(now);
        let n = &mut self.nodes[node];
        let svc = n.service.as_mut().expect("backoff expired without a packet");
        if svc.attempt == 0 && node == SUT {
            svc.bin = Some(bin_of(pos.x));
        }
        let mcs = svc
            .chain
            .rate_for_attempt(svc.attempt)
            .expect("attempt within the chain budget");
        let frame = Frame {
            kind: FrameKind::Data,
            src: Node::id(node),
            dst: Node::id(AP),
            psdu_bytes: n.psdu_bytes,
            mcs,
            seq: svc.packet.seq,
            gen_time: svc.packet.gen_time,
        };
        self.transmit(node, frame, now);
    }

    /// Puts `frame` on the air from `node` and announces it to every node
    /// that can hear it.
    fn transmit(&mut self, node: usize, frame: Frame, now: SimTime) {
        let pos = self.nodes[node].position(now);
        let airtime = self.phy.airtime(frame.mcs.entry(), frame.psdu_bytes);
        let on_air = OnAirFrame {
            frame,
            tx_start: now,
            tx_end: now + airtime,
            tx_power_dbm: self.phy.tx_power_dbm,
            tx_position: pos,
        };
        let tx = self.medium.push(on_air, now);

        let n = &mut self.nodes[node];
        n.transmitting = true;
        n.locked = None;
        n.dcf.on_medium_busy(now);
        self.schedule(on_air.tx_end, Event::TxEnd { node, tx });

        let floor = self.phy.cs_threshold_dbm.min(self.phy.rx_sensitivity_dbm);
        for other in 0..self.nodes.len() {
            if other == node {
                continue;
            }
            let rx = self.nodes[other].position(now);
            let power = on_air.power_at(rx, &self.channel);
            if power < floor {
                continue;
            }
            let sensed = power >= self.phy.cs_threshold_dbm;
            let lockable = power >= self.phy.rx_sensitivity_dbm;
            let prop = self.channel.propagation_delay(pos.distance(rx));
            self.schedule(
                now + prop,
                Event::RxStart {
                    node: other,
                    tx,
                    sensed,
                    lockable,
                },
            );
            self.schedule(on_air.tx_end + prop, Event::RxResolve { node: other, tx, sensed });
        }
    }

    fn on_tx_end(&mut self, node: usize, tx: u64, now: SimTime) {
        let frame = self.medium.get(tx).frame;
        let n = &mut self.nodes[node];
        n.transmitting = false;
        let expiry = n.dcf.on_medium_idle(now);
        self.schedule_backoff(node, expiry);
        if frame.kind == FrameKind::Data {
            let n = &mut self.nodes[node];
            n.ack_token += 1;
            n.awaiting_ack = Some(n.ack_token);
            let token = n.ack_token;
            let timeout = ack_timeout_for(frame.mcs, &self.phy, &self.channel);
            self.schedule(now + timeout, Event::AckTimeout { node, token });
        }
    }

    fn on_frame_received(&mut self, node: usize, tx: u64, now: SimTime) {
        let target = *self.medium.get(tx);
        if target.frame.dst != Node::id(node) {
            return;
        }
        let rx = self.nodes[node].position(target.tx_start);
        self.scratch.clear();
        let first = self.medium.first_id;
        for (i, f) in self.medium.frames.iter().enumerate() {
            if first + i as u64 != tx && f.frame.src != Node::id(node) {
                self.scratch.push(*f);
            }
        }
        let outcome = resolve_reception(
            &target,
            rx,
            &self.scratch,
            &self.phy,
            &self.channel,
            &self.errors,
            &mut self.nodes[node].reception_rng,
        );
        if outcome != Reception::Delivered {
            return;
        }
        match target.frame.kind {
            FrameKind::Data => {
                let ack = target.frame.ack();
                self.schedule(now + self.phy.sifs(), Event::TxStart { node, frame: ack });
            }
            FrameKind::Ack => {
                let n = &self.nodes[node];
                let expected = n.awaiting_ack.is_some()
                    && n.service.as_ref().is_some_and(|s| s.packet.seq == target.frame.seq);
                if expected {
                    self.nodes[node].awaiting_ack = None;
                    self.finish_packet(node, now, true);
                }
            }
        }
    }

    fn on_attempt_failed(&mut self, node: usize, now: SimTime) {
        let n = &mut self.nodes[node];
        let svc = n.service.as_mut().expect("timeout without a packet in service");
        svc.attempt += 1;
        if svc.attempt >= svc.chain.total_attempts() {
            self.finish_packet(node, now, false);
        } else {
            n.dcf.on_failure();
            let expiry = n.dcf.request_access(now, &mut n.backoff_rng);
            self.schedule_backoff(node, expiry);
        }
    }

    /// Closes the packet in service as acknowledged or dropped and moves on
    /// to the next one.
    fn finish_packet(&mut self, node: usize, now: SimTime, acked: bool) {
        let n = &mut self.nodes[node];
        let svc = n.service.take().expect("no packet in service");
        let attempts = if acked { svc.attempt + 1 } else { svc.attempt };
        if let Some(m) = n.minstrel.as_mut() {
            m.record_result(&svc.chain, attempts, acked);
        }
        n.dcf.reset_cw();
        if acked {
            n.acked += 1;
        } else {
            n.dropped += 1;
        }
        if node == SUT {
            let outcome = if acked {
                RawOutcome::Acked { at: now }
            } else {
                RawOutcome::Dropped { at: now }
            };
            self.record_sut(svc.packet, svc.bin, attempts, outcome);
        }
        self.start_service(node, now);
    }

    fn record_sut(&mut self, packet: Packet, bin: Option<u32>, attempts: u32, outcome: RawOutcome) {
        if packet.gen_time < self.warmup_until {
            return;
        }
        let record = RawRecord {
            seq: packet.seq,
            gen_time: packet.gen_time,
            bin,
            attempts,
            outcome,
        };
        if let Some(b) = bin {
            let idx = (b as usize).min(self.bins.len() - 1);
            self.bins[idx].record(record.packet_outcome());
        }
        if let Some(raw) = &mut self.raw {
            raw.push(record);
        }
    }

    fn finish(mut self) -> RunOutput {
        let end = self.end;
        match self.nodes[SUT].trajectory {
            Trajectory::Static(p) => {
                let bin = (bin_of(p.x) as usize).min(self.dwell_s.len() - 1);
                self.dwell_s[bin] = end.as_secs_f64();
            }
            Trajectory::Triangle { .. } => self.accrue_dwell(end),
        }

        let leftovers: Vec<_> = {
            let sut = &mut self.nodes[SUT];
            let in_service = sut.service.take().map(|s| (s.packet, s.bin, s.attempt));
            in_service
                .into_iter()
                .chain(sut.queue.drain(..).map(|p| (p, None, 0)))
                .collect()
        };
        let sut_in_flight = leftovers.len() as u64;
        for (packet, bin, attempts) in leftovers {
            self.record_sut(packet, bin, attempts, RawOutcome::InFlight);
        }

        let sources = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role != Role::AccessPoint)
            .map(|(idx, n)| SourceCounts {
                node: Node::id(idx),
                role: n.role,
                generated: n.generated,
                acked: n.acked,
                dropped: n.dropped,
                in_flight: if idx == SUT {
                    sut_in_flight
                } else {
                    n.queue.len() as u64 + u64::from(n.service.is_some())
                },
            })
            .collect();
        let mut raw = self.raw.unwrap_or_default();
        raw.sort_by_key(|r| r.seq);
        RunOutput {
            bins: self.bins,
            dwell_s: self.dwell_s,
            sources,
            sim_end: end,
            events_processed: self.events_processed,
            trace: self.trace.unwrap_or_default(),
            raw,
        }
    }
}
