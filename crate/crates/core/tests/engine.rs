use std::time::Duration;

use minstrel_sim::channel::{ChannelParams, OnAirFrame, Point};
use minstrel_sim::engine::rng::rng_stream;
use minstrel_sim::engine::{
    build_scenario, Geometry, MobilityScenario, NetworkConfig, RawOutcome, RunOutput, ScenarioConfig,
};
use minstrel_sim::harness::report::{reaggregate, to_csv, CsvRow};
use minstrel_sim::harness::{simulate, REPORT_BINS};
use minstrel_sim::mac::{carrier_sense, ChannelState, Frame, FrameKind, NodeId};
use minstrel_sim::phy::{ErrorModel, Mcs, PhyParams, ACK_PSDU_BYTES, NUM_MCS};
use minstrel_sim::SimTime;
use rand::Rng;

fn run(network: NetworkConfig, mobility: MobilityScenario, dwell: f64, tweak: impl FnOnce(&mut ScenarioConfig)) -> RunOutput {
    let mut c = ScenarioConfig::new(network, mobility);
    c.dwell_per_bin = dwell;
    c.raw_log = true;
    tweak(&mut c);
    build_scenario(&c).unwrap().run()
}

fn csv_of(out: &RunOutput) -> String {
    to_csv(&out.bins.iter().map(CsvRow::from_bin).collect::<Vec<_>>())
}

#[test]
fn identical_configs_replay_identically() {
    for network in NetworkConfig::ALL {
        let a = run(network, MobilityScenario::Static, 20.0, |c| c.static_position = 30.0);
        let b = run(network, MobilityScenario::Static, 20.0, |c| c.static_position = 30.0);
        assert_eq!(csv_of(&a), csv_of(&b), "{network}");
        assert_eq!(a.raw, b.raw);
        assert_eq!(a.events_processed, b.events_processed);
        assert_eq!(a.sources, b.sources);
    }
    let a = run(NetworkConfig::Hidden, MobilityScenario::Fast, 1.0, |c| c.seed = 9);
    let b = run(NetworkConfig::Hidden, MobilityScenario::Fast, 1.0, |c| c.seed = 9);
    assert_eq!(a.raw, b.raw);
    let other = run(NetworkConfig::Hidden, MobilityScenario::Fast, 1.0, |c| c.seed = 10);
    assert_ne!(a.raw, other.raw, "different seeds should differ somewhere");
}

#[test]
fn every_packet_is_accounted_for() {
    for network in NetworkConfig::ALL {
        for (mobility, dwell) in [(MobilityScenario::Static, 30.0), (MobilityScenario::Fast, 2.0)] {
            let out = run(network, mobility, dwell, |c| c.static_position = 25.0);
            for s in &out.sources {
                assert_eq!(
                    s.generated,
                    s.acked + s.dropped + s.in_flight,
                    "{network}/{mobility}: {s:?}"
                );
            }
            let sut = out.sources[0];
            let binned: u64 = out.bins.iter().map(|b| b.n_generated).sum();
            let unbinned = out.raw.iter().filter(|r| r.bin.is_none()).count() as u64;
            assert_eq!(binned + unbinned, sut.generated);
            assert_eq!(out.raw.len() as u64, sut.generated);
            for b in &out.bins {
                assert_eq!(b.n_acked() + b.n_dropped + b.n_in_flight, b.n_generated);
            }
        }
    }
}

fn fixed(p: f64) -> ErrorModel {
    ErrorModel::Fixed([p; NUM_MCS])
}

#[test]
fn first_packet_latency_has_closed_form() {
    let out = run(NetworkConfig::NoInt, MobilityScenario::Static, 5.0, |c| {
        c.params.errors = fixed(0.0);
        c.seed = 77;
    });
    let phy = PhyParams::default();
    let chan = ChannelParams::default();
    let backoff: u32 = rng_stream(77, NodeId(1), "backoff").random_range(0..=15);
    // Cold start: 6 Mb/s data, 6 Mb/s ACK, one-way delay at 1 m.
    let data = phy.airtime(Mcs::LOWEST.entry(), 86);
    let ack = phy.airtime(Mcs::LOWEST.ack_rate().entry(), ACK_PSDU_BYTES);
    let prop = chan.propagation_delay(1.0);
    let expected = phy.difs() + phy.slot() * backoff + data + phy.sifs() + ack + 2 * prop;
    let first = out.raw[0];
    assert_eq!(first.gen_time, SimTime::ZERO);
    assert_eq!(first.attempts, 1);
    assert_eq!(first.outcome, RawOutcome::Acked { at: SimTime::ZERO + expected });
    assert_eq!(expected, Duration::from_nanos(34_000 + 9_000 * backoff as u64 + 140_000 + 16_000 + 44_000 + 6));
}

#[test]
fn single_station_latency_floor() {
    let out = run(NetworkConfig::NoInt, MobilityScenario::Fast, 2.0, |c| c.params.errors = fixed(0.0));
    let phy = PhyParams::default();
    let floor = phy.difs()
        + phy.airtime(Mcs::HIGHEST.entry(), 86)
        + phy.sifs()
        + phy.airtime(Mcs::HIGHEST.ack_rate().entry(), ACK_PSDU_BYTES);
    let mut n = 0;
    for r in &out.raw {
        if let RawOutcome::Acked { at } = r.outcome {
            assert!(at - r.gen_time >= floor, "{r:?}");
            n += 1;
        }
    }
    assert!(n > 150);
}

#[test]
fn jammed_channel_drops_after_full_budget() {
    let out = run(NetworkConfig::NoInt, MobilityScenario::Static, 20.0, |c| c.params.errors = fixed(1.0));
    assert_eq!(out.bins[1].n_generated, 40);
    assert_eq!(out.bins[1].n_dropped, out.bins[1].n_generated - out.bins[1].n_in_flight);
    assert!(out.bins[1].n_dropped >= 39);
    for r in out.raw.iter().filter(|r| matches!(r.outcome, RawOutcome::Dropped { .. })) {
        assert_eq!(r.attempts, 8);
    }
}

#[test]
fn clear_channel_never_drops() {
    for mobility in MobilityScenario::ALL {
        let out = run(NetworkConfig::NoInt, mobility, 2.0, |c| {
            c.params.errors = fixed(0.0);
            c.static_position = 50.0;
        });
        assert!(out.bins.iter().all(|b| b.n_dropped == 0), "{mobility}");
        assert!(out.sources[0].acked > 0);
    }
}

#[test]
fn hidden_collisions_drop_even_error_free_frames() {
    // A receiver locked onto the interferer misses the SUT's frame outright.
    let out = run(NetworkConfig::Hidden, MobilityScenario::Static, 60.0, |c| {
        c.params.errors = fixed(0.0);
        c.static_position = 30.0;
    });
    assert!(out.bins[30].n_dropped > 0);
}

#[test]
fn hidden_interferer_sensed_only_within_range() {
    let g = Geometry::default();
    let phy = PhyParams::default();
    let chan = ChannelParams::default();
    let frame = OnAirFrame {
        frame: Frame {
            kind: FrameKind::Data,
            src: NodeId(2),
            dst: NodeId(0),
            psdu_bytes: 1536,
            mcs: Mcs::LOWEST,
            seq: 0,
            gen_time: SimTime::ZERO,
        },
        tx_start: SimTime::ZERO,
        tx_end: SimTime::from_micros(2072),
        tx_power_dbm: phy.tx_power_dbm,
        tx_position: g.hidden_int,
    };
    let at = SimTime::from_micros(1000);
    for d in 0..=51 {
        let state = carrier_sense(Point::new(d as f64, 0.0), at, &[frame], &phy, &chan);
        match d {
            0..=10 => assert_eq!(state, ChannelState::Busy, "D_S = {d}"),
            12.. => assert_eq!(state, ChannelState::Idle, "D_S = {d}"),
            _ => {}
        }
    }
    // The SUT at 20 m is hidden; the AP always hears the interferer.
    assert_eq!(carrier_sense(Point::new(20.0, 0.0), at, &[frame], &phy, &chan), ChannelState::Idle);
    assert_eq!(carrier_sense(g.ap, at, &[frame], &phy, &chan), ChannelState::Busy);
}

#[test]
fn raw_log_rebuilds_the_summary() {
    for (network, mobility, dwell) in [
        (NetworkConfig::Hidden, MobilityScenario::Fast, 2.0),
        (NetworkConfig::Visible, MobilityScenario::Static, 4.0),
    ] {
        let params = Default::default();
        let r = simulate(network, mobility, dwell, 3, &params, false, true).unwrap();
        let rebuilt = reaggregate(&r.raw, REPORT_BINS);
        let rows = |bins: &[minstrel_sim::harness::BinStats]| {
            to_csv(&bins.iter().map(CsvRow::from_bin).collect::<Vec<_>>())
        };
        assert_eq!(rows(&rebuilt), rows(&r.bins));
        for (a, b) in rebuilt.iter().zip(&r.bins) {
            let mut x = a.latencies_ns().to_vec();
            let mut y = b.latencies_ns().to_vec();
            x.sort_unstable();
            y.sort_unstable();
            assert_eq!(x, y);
        }
    }
}

#[test]
fn sut_binning_follows_first_attempt() {
    let out = run(NetworkConfig::NoInt, MobilityScenario::Fast, 2.0, |_| {});
    // One packet every 0.5 m along the track: each interior bin sees four
    // first attempts per round trip.
    for b in 1..=50 {
        assert_eq!(out.bins[b].n_generated, 4, "bin {b}");
    }
}
