//! 802.11a OFDM PHY: the eight mandatory/optional rates, frame airtime, and
//! the error model that maps SINR to the probability that one transmission
//! attempt fails.

use std::fmt;
use std::time::Duration;

use crate::channel::ChannelParams;

pub const NUM_MCS: usize = 8;

/// Thermal noise reference temperature (K).
const NOISE_TEMPERATURE_K: f64 = 290.0;
const BOLTZMANN: f64 = 1.380_649e-23;

/// OFDM SERVICE field plus convolutional tail, in bits.
const SERVICE_BITS: u32 = 16;
const TAIL_BITS: u32 = 6;

/// PSDU length of an ACK frame.
pub const ACK_PSDU_BYTES: u32 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn label(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam64 => "64QAM",
        }
    }

    /// Uncoded bit error rate on an AWGN channel at linear SNR `snr`.
    fn uncoded_ber(self, snr: f64) -> f64 {
        use libm::erfc;
        match self {
            Modulation::Bpsk => 0.5 * erfc(snr.sqrt()),
            Modulation::Qpsk => 0.5 * erfc((snr / 2.0).sqrt()),
            Modulation::Qam16 => 0.75 * 0.5 * erfc((snr / (5.0 * 2.0)).sqrt()),
            Modulation::Qam64 => 7.0 / 12.0 * 0.5 * erfc((snr / (21.0 * 2.0)).sqrt()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodingRate {
    pub num: u8,
    pub den: u8,
}

impl CodingRate {
    const HALF: CodingRate = CodingRate { num: 1, den: 2 };
    const TWO_THIRDS: CodingRate = CodingRate { num: 2, den: 3 };
    const THREE_QUARTERS: CodingRate = CodingRate { num: 3, den: 4 };

    /// Union bound on the post-Viterbi bit error probability for the
    /// 802.11 K=7 convolutional code (punctured for 2/3 and 3/4), given the
    /// raw channel bit error probability `p`. Distance spectra are the
    /// standard tables for the (133, 171) mother code.
    fn coded_ber(self, p: f64) -> f64 {
        const HALF: [(f64, i32); 9] = [
            (36.0, 10),
            (211.0, 12),
            (1404.0, 14),
            (11633.0, 16),
            (77433.0, 18),
            (502690.0, 20),
            (3322763.0, 22),
            (21292910.0, 24),
            (134365911.0, 26),
        ];
        const TWO_THIRDS: [(f64, i32); 10] = [
            (3.0, 6),
            (70.0, 7),
            (285.0, 8),
            (1276.0, 9),
            (6160.0, 10),
            (27128.0, 11),
            (117019.0, 12),
            (498860.0, 13),
            (2103891.0, 14),
            (8784123.0, 15),
        ];
        const THREE_QUARTERS: [(f64, i32); 10] = [
            (42.0, 5),
            (201.0, 6),
            (1492.0, 7),
            (10469.0, 8),
            (62935.0, 9),
            (379644.0, 10),
            (2253373.0, 11),
            (13073811.0, 12),
            (75152755.0, 13),
            (428005675.0, 14),
        ];
        let d = (4.0 * p * (1.0 - p)).sqrt();
        let (spectrum, scale): (&[(f64, i32)], f64) = match (self.num, self.den) {
            (1, 2) => (&HALF, 0.5),
            (2, 3) => (&TWO_THIRDS, 1.0 / 4.0),
            (3, 4) => (&THREE_QUARTERS, 1.0 / 6.0),
            _ => unreachable!("802.11a uses only 1/2, 2/3 and 3/4"),
        };
        let sum: f64 = spectrum.iter().map(|&(c, k)| c * d.powi(k)).sum();
        (scale * sum).min(1.0)
    }
}

impl fmt::Display for CodingRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// One row of the 802.11a rate table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McsEntry {
    pub index: u8,
    pub data_rate_mbps: u32,
    /// Data bits per OFDM symbol.
    pub n_dbps: u32,
    pub modulation: Modulation,
    pub coding_rate: CodingRate,
}

pub const MCS_TABLE: [McsEntry; NUM_MCS] = {
    const fn row(index: u8, rate: u32, n_dbps: u32, m: Modulation, c: CodingRate) -> McsEntry {
        McsEntry {
            index,
            data_rate_mbps: rate,
            n_dbps,
            modulation: m,
            coding_rate: c,
        }
    }
    use Modulation::*;
    [
        row(0, 6, 24, Bpsk, CodingRate::HALF),
        row(1, 9, 36, Bpsk, CodingRate::THREE_QUARTERS),
        row(2, 12, 48, Qpsk, CodingRate::HALF),
        row(3, 18, 72, Qpsk, CodingRate::THREE_QUARTERS),
        row(4, 24, 96, Qam16, CodingRate::HALF),
        row(5, 36, 144, Qam16, CodingRate::THREE_QUARTERS),
        row(6, 48, 192, Qam64, CodingRate::TWO_THIRDS),
        row(7, 54, 216, Qam64, CodingRate::THREE_QUARTERS),
    ]
};

/// Index into [`MCS_TABLE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mcs(u8);

impl Mcs {
    pub const LOWEST: Mcs = Mcs(0);
    pub const HIGHEST: Mcs = Mcs(NUM_MCS as u8 - 1);

    pub fn new(index: usize) -> Option<Mcs> {
        (index < NUM_MCS).then_some(Mcs(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn entry(self) -> &'static McsEntry {
        &MCS_TABLE[self.index()]
    }

    pub fn all() -> impl DoubleEndedIterator<Item = Mcs> + Clone {
        (0..NUM_MCS as u8).map(Mcs)
    }

    /// Control-response rate for an ACK answering a data frame sent at
    /// `self`: the highest basic rate (6, 12 or 24 Mb/s) not above it.
    pub fn ack_rate(self) -> Mcs {
        match self.0 {
            0 | 1 => Mcs(0),
            2 | 3 => Mcs(2),
            _ => Mcs(4),
        }
    }
}

impl fmt::Display for Mcs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Mb/s", self.entry().data_rate_mbps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhyParams {
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub channel_width_hz: f64,
    /// Frames arriving weaker than this are not decoded at all.
    pub rx_sensitivity_dbm: f64,
    /// Energy above this marks the medium busy.
    pub cs_threshold_dbm: f64,
    pub preamble_us: u32,
    pub symbol_us: u32,
    pub sifs_us: u32,
    pub slot_us: u32,
}

impl PhyParams {
    /// Default radio with sensitivity and carrier-sense thresholds placed so
    /// that a frame is decodable out to exactly `channel.d_max_m`.
    pub fn calibrated(channel: &ChannelParams) -> Self {
        let mut phy = PhyParams {
            tx_power_dbm: 16.0206,
            noise_figure_db: 7.0,
            channel_width_hz: 20e6,
            rx_sensitivity_dbm: 0.0,
            cs_threshold_dbm: 0.0,
            preamble_us: 20,
            symbol_us: 4,
            sifs_us: 16,
            slot_us: 9,
        };
        phy.calibrate_thresholds(channel);
        phy
    }

    pub fn calibrate_thresholds(&mut self, channel: &ChannelParams) {
        let threshold = self.tx_power_dbm - channel.path_loss(channel.d_max_m);
        self.rx_sensitivity_dbm = threshold;
        self.cs_threshold_dbm = threshold;
    }

    /// kTB thermal noise plus the receiver noise figure.
    pub fn noise_floor_dbm(&self) -> f64 {
        mw_to_dbm(BOLTZMANN * NOISE_TEMPERATURE_K * self.channel_width_hz * 1e3) + self.noise_figure_db
    }

    pub fn sifs(&self) -> Duration {
        Duration::from_micros(self.sifs_us.into())
    }

    pub fn slot(&self) -> Duration {
        Duration::from_micros(self.slot_us.into())
    }

    pub fn difs(&self) -> Duration {
        self.sifs() + 2 * self.slot()
    }

    /// Airtime of a PSDU using this radio's preamble and symbol timing.
    pub fn airtime(&self, mcs: &McsEntry, psdu_bytes: u32) -> Duration {
        let bits = SERVICE_BITS + 8 * psdu_bytes + TAIL_BITS;
        let symbols = bits.div_ceil(mcs.n_dbps);
        Duration::from_micros(u64::from(self.preamble_us + self.symbol_us * symbols))
    }
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams::calibrated(&ChannelParams::default())
    }
}

/// 802.11a frame duration: 20 µs of preamble and SIGNAL, then whole 4 µs
/// symbols carrying SERVICE + PSDU + tail.
pub fn frame_duration(mcs: &McsEntry, psdu_bytes: u32) -> Duration {
    let bits = SERVICE_BITS + 8 * psdu_bytes + TAIL_BITS;
    Duration::from_micros(u64::from(20 + 4 * bits.div_ceil(mcs.n_dbps)))
}

fn raw_per(mcs: &McsEntry, snr_db: f64, psdu_bytes: u32) -> f64 {
    let snr = dbm_to_mw(snr_db);
    let ber = mcs.coding_rate.coded_ber(mcs.modulation.uncoded_ber(snr));
    let bits = f64::from(8 * psdu_bytes);
    // 1 - (1 - ber)^bits, without cancellation for tiny ber.
    -(bits * (-ber).ln_1p()).exp_m1()
}

/// Probability that one attempt of `psdu_bytes` at `mcs` fails at the given
/// SINR.
///
/// The raw per-rate curves cross slightly between 9 and 12 Mb/s, so each
/// rate's curve is floored by every slower rate's curve. That keeps the
/// family ordered by MCS index while staying monotone in SNR.
pub fn per(mcs: &McsEntry, snr_db: f64, psdu_bytes: u32) -> f64 {
    MCS_TABLE[..=mcs.index as usize]
        .iter()
        .map(|m| raw_per(m, snr_db, psdu_bytes))
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

pub fn snr(rx_power_dbm: f64, interference_plus_noise_dbm: f64) -> f64 {
    rx_power_dbm - interference_plus_noise_dbm
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Power sum of several signals, in dBm.
pub fn combine_dbm(powers: impl IntoIterator<Item = f64>) -> f64 {
    mw_to_dbm(powers.into_iter().map(dbm_to_mw).sum())
}

/// Per-attempt failure model applied to data frames.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ErrorModel {
    /// [`per`] evaluated at the worst-case SINR.
    #[default]
    Analytic,
    /// Fixed failure probability per MCS, independent of SINR. Used to jam
    /// or clear the channel in tests.
    Fixed([f64; NUM_MCS]),
}

impl ErrorModel {
    pub fn data_per(&self, mcs: Mcs, sinr_db: f64, psdu_bytes: u32) -> f64 {
        match self {
            ErrorModel::Analytic => per(mcs.entry(), sinr_db, psdu_bytes),
            ErrorModel::Fixed(table) => table[mcs.index()],
        }
    }
}
