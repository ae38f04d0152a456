use std::fmt;
use std::str::FromStr;

use crate::channel::{ChannelParams, Point};
use crate::mac::MacParams;
use crate::minstrel::MinstrelParams;
use crate::mobility::{dwell_repetitions, Trajectory};
use crate::phy::{ErrorModel, PhyParams};
use crate::traffic::{BurstySource, PeriodicSource};
use crate::{Error, Result};

use super::sim::Simulation;

/// Which stations share the cell with the SUT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetworkConfig {
    NoInt,
    Visible,
    Hidden,
}

impl NetworkConfig {
    pub const ALL: [NetworkConfig; 3] = [NetworkConfig::NoInt, NetworkConfig::Visible, NetworkConfig::Hidden];

    pub fn name(self) -> &'static str {
        match self {
            NetworkConfig::NoInt => "no_int",
            NetworkConfig::Visible => "visible",
            NetworkConfig::Hidden => "hidden",
        }
    }
}

impl fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetworkConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "no_int" | "noint" => Ok(NetworkConfig::NoInt),
            "visible" => Ok(NetworkConfig::Visible),
            "hidden" => Ok(NetworkConfig::Hidden),
            _ => Err(Error::UnknownConfiguration(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MobilityScenario {
    Static,
    Slow,
    Medium,
    Fast,
}

impl MobilityScenario {
    pub const ALL: [MobilityScenario; 4] = [
        MobilityScenario::Static,
        MobilityScenario::Slow,
        MobilityScenario::Medium,
        MobilityScenario::Fast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MobilityScenario::Static => "static",
            MobilityScenario::Slow => "slow",
            MobilityScenario::Medium => "medium",
            MobilityScenario::Fast => "fast",
        }
    }

    /// Shuttle speed in m/s; `None` when static.
    pub fn speed(self) -> Option<f64> {
        match self {
            MobilityScenario::Static => None,
            MobilityScenario::Slow => Some(0.01),
            MobilityScenario::Medium => Some(0.1),
            MobilityScenario::Fast => Some(1.0),
        }
    }
}

impl fmt::Display for MobilityScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MobilityScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static" => Ok(MobilityScenario::Static),
            "slow" => Ok(MobilityScenario::Slow),
            "medium" => Ok(MobilityScenario::Medium),
            "fast" => Ok(MobilityScenario::Fast),
            _ => Err(Error::UnknownMobility(s.to_string())),
        }
    }
}

/// Placement of the fixed nodes and the SUT's track.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub ap: Point,
    pub visible_int: Point,
    pub hidden_int: Point,
    pub track_min: f64,
    pub track_max: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            ap: Point::ORIGIN,
            visible_int: Point::new(0.0, 2.0),
            hidden_int: Point::new(-40.0, 2.0),
            track_min: 0.0,
            track_max: 51.0,
        }
    }
}

/// Every tunable model constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub phy: PhyParams,
    pub channel: ChannelParams,
    pub mac: MacParams,
    pub minstrel: MinstrelParams,
    pub sut_traffic: PeriodicSource,
    pub int_traffic: BurstySource,
    pub geometry: Geometry,
    /// Error model for data frames; ACKs always use the analytic curves.
    pub errors: ErrorModel,
    /// Exclude SUT packets generated before the first Minstrel update.
    pub discard_warmup: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            phy: PhyParams::default(),
            channel: ChannelParams::default(),
            mac: MacParams::default(),
            minstrel: MinstrelParams::default(),
            sut_traffic: PeriodicSource::default(),
            int_traffic: BurstySource::default(),
            geometry: Geometry::default(),
            errors: ErrorModel::Analytic,
            discard_warmup: false,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let c = &self.channel;
        if !(c.exponent > 0.0 && c.reference_loss_db > 0.0 && c.d_max_m > 0.0 && c.propagation_speed > 0.0) {
            return Err(Error::InvalidScenario(
                "channel exponent, reference loss, speed and d_max must be positive".into(),
            ));
        }
        if self.phy.rx_sensitivity_dbm > self.phy.cs_threshold_dbm {
            return Err(Error::InvalidScenario(
                "rx sensitivity must not exceed the carrier-sense threshold".into(),
            ));
        }
        if self.phy.symbol_us == 0 || self.phy.slot_us == 0 {
            return Err(Error::InvalidScenario("symbol and slot times must be positive".into()));
        }
        self.mac.validate()?;
        self.minstrel.validate(self.mac.attempt_budget())?;
        if self.sut_traffic.period.is_zero() {
            return Err(Error::InvalidScenario("SUT traffic period must be positive".into()));
        }
        let b = &self.int_traffic;
        if b.gap_mean.is_zero()
            || b.intra_spacing.is_zero()
            || b.count_cap == 0
            || !(b.count_mean > 0.0)
            || b.gap_cap < b.gap_mean
            || (b.count_cap as f64) < b.count_mean
        {
            return Err(Error::InvalidScenario(
                "interferer burst parameters must be positive with caps at or above the means".into(),
            ));
        }
        let g = &self.geometry;
        if !(g.track_max > g.track_min && g.track_min >= 0.0) {
            return Err(Error::InvalidScenario(format!(
                "track [{}, {}] must be non-empty and start at or after the AP",
                g.track_min, g.track_max
            )));
        }
        if let ErrorModel::Fixed(p) = &self.errors {
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidScenario("fixed PER values must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// One simulation instance: a network, a mobility pattern and how long to
/// observe it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub network: NetworkConfig,
    pub mobility: MobilityScenario,
    /// SUT distance from the AP for static runs.
    pub static_position: f64,
    /// Seconds of SUT presence per bin.
    pub dwell_per_bin: f64,
    pub seed: u64,
    pub params: Params,
    pub trace_minstrel: bool,
    pub raw_log: bool,
}

impl ScenarioConfig {
    pub fn new(network: NetworkConfig, mobility: MobilityScenario) -> Self {
        ScenarioConfig {
            network,
            mobility,
            static_position: 1.0,
            dwell_per_bin: 600.0,
            seed: 1,
            params: Params::default(),
            trace_minstrel: false,
            raw_log: false,
        }
    }

    /// Simulated duration: the dwell itself when static, otherwise enough
    /// whole round trips to give every interior bin that much presence.
    pub fn duration_s(&self) -> Result<f64> {
        match self.mobility.speed() {
            None => Ok(self.dwell_per_bin),
            Some(v) => {
                let reps = dwell_repetitions(v, self.dwell_per_bin)?;
                let g = &self.params.geometry;
                Ok(reps as f64 * 2.0 * (g.track_max - g.track_min) / v)
            }
        }
    }

    pub(crate) fn sut_trajectory(&self) -> Result<Trajectory> {
        let g = &self.params.geometry;
        match self.mobility.speed() {
            None => {
                let x = self.static_position;
                if !(x >= g.track_min && x <= g.track_max) {
                    return Err(Error::InvalidScenario(format!(
                        "static position {x} m lies outside the track [{}, {}]",
                        g.track_min, g.track_max
                    )));
                }
                Ok(Trajectory::Static(Point::new(x, 0.0)))
            }
            Some(v) => Trajectory::shuttle(v, g.track_min, g.track_max),
        }
    }

    pub(crate) fn interferer_position(&self) -> Option<Point> {
        match self.network {
            NetworkConfig::NoInt => None,
            NetworkConfig::Visible => Some(self.params.geometry.visible_int),
            NetworkConfig::Hidden => Some(self.params.geometry.hidden_int),
        }
    }
}

/// Validates `config` and wires up its nodes.
pub fn build_scenario(config: &ScenarioConfig) -> Result<Simulation> {
    config.params.validate()?;
    if !(config.dwell_per_bin > 0.0 && config.dwell_per_bin.is_finite()) {
        return Err(Error::InvalidScenario(format!(
            "dwell per bin must be positive (got {})",
            config.dwell_per_bin
        )));
    }
    Simulation::new(config)
}
