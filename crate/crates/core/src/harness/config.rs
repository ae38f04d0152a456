//! Parameter files: one `key = value` per line, `#` starts a comment.
//!
//! Keys name a module and a field, e.g. `channel.exponent = 3.5` or
//! `minstrel.segments = 4,2,1,1`. Unless a file sets `phy.rx_sensitivity_dbm`
//! or `phy.cs_threshold_dbm` itself, both thresholds are recalibrated after
//! all overrides so the decode range stays at `channel.d_max_m`.

use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use crate::engine::Params;
use crate::phy::{ErrorModel, NUM_MCS};
use crate::{Error, Result};

/// Every key `apply_override` accepts.
pub const KEYS: &[&str] = &[
    "phy.tx_power_dbm",
    "phy.noise_figure_db",
    "phy.channel_width_hz",
    "phy.rx_sensitivity_dbm",
    "phy.cs_threshold_dbm",
    "phy.preamble_us",
    "phy.symbol_us",
    "phy.sifs_us",
    "phy.slot_us",
    "channel.exponent",
    "channel.reference_loss_db",
    "channel.propagation_speed",
    "channel.d_max_m",
    "mac.cw_min",
    "mac.cw_max",
    "mac.retry_limit",
    "minstrel.update_interval_ms",
    "minstrel.ewma_weight",
    "minstrel.sampling_fraction",
    "minstrel.segments",
    "traffic.sut_period_s",
    "traffic.sut_payload_bytes",
    "traffic.sut_start_offset_s",
    "traffic.burst_gap_mean_s",
    "traffic.burst_gap_cap_s",
    "traffic.burst_count_mean",
    "traffic.burst_count_cap",
    "traffic.burst_spacing_s",
    "traffic.int_payload_bytes",
    "geometry.ap_x",
    "geometry.ap_y",
    "geometry.visible_int_x",
    "geometry.visible_int_y",
    "geometry.hidden_int_x",
    "geometry.hidden_int_y",
    "geometry.track_min",
    "geometry.track_max",
    "error.data_per",
    "run.discard_warmup",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn finite(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
        })
    }
}

fn seconds(key: &str, value: &str) -> Result<Duration> {
    let v = finite(key, value)?;
    Duration::try_from_secs_f64(v).map_err(|_| Error::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|s| parse(key, s.trim())).collect()
}

/// Applies one override. Returns whether it set a detection threshold.
pub fn apply_override(params: &mut Params, key: &str, value: &str) -> Result<bool> {
    let p = params;
    let bad = || Error::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    };
    match key {
        "phy.tx_power_dbm" => p.phy.tx_power_dbm = finite(key, value)?,
        "phy.noise_figure_db" => p.phy.noise_figure_db = finite(key, value)?,
        "phy.channel_width_hz" => p.phy.channel_width_hz = finite(key, value)?,
        "phy.rx_sensitivity_dbm" => {
            p.phy.rx_sensitivity_dbm = finite(key, value)?;
            return Ok(true);
        }
        "phy.cs_threshold_dbm" => {
            p.phy.cs_threshold_dbm = finite(key, value)?;
            return Ok(true);
        }
        "phy.preamble_us" => p.phy.preamble_us = parse(key, value)?,
        "phy.symbol_us" => p.phy.symbol_us = parse(key, value)?,
        "phy.sifs_us" => p.phy.sifs_us = parse(key, value)?,
        "phy.slot_us" => p.phy.slot_us = parse(key, value)?,
        "channel.exponent" => p.channel.exponent = finite(key, value)?,
        "channel.reference_loss_db" => p.channel.reference_loss_db = finite(key, value)?,
        "channel.propagation_speed" => p.channel.propagation_speed = finite(key, value)?,
        "channel.d_max_m" => p.channel.d_max_m = finite(key, value)?,
        "mac.cw_min" => p.mac.cw_min = parse(key, value)?,
        "mac.cw_max" => p.mac.cw_max = parse(key, value)?,
        "mac.retry_limit" => p.mac.retry_limit = parse(key, value)?,
        "minstrel.update_interval_ms" => {
            p.minstrel.update_interval = seconds(key, value)?.checked_div(1000).ok_or_else(bad)?;
        }
        "minstrel.ewma_weight" => p.minstrel.ewma_weight = finite(key, value)?,
        "minstrel.sampling_fraction" => p.minstrel.sampling_fraction = finite(key, value)?,
        "minstrel.segments" => {
            p.minstrel.segments = list::<u32>(key, value)?.try_into().map_err(|_| bad())?;
        }
        "traffic.sut_period_s" => p.sut_traffic.period = seconds(key, value)?,
        "traffic.sut_payload_bytes" => p.sut_traffic.payload = parse(key, value)?,
        "traffic.sut_start_offset_s" => p.sut_traffic.start_offset = seconds(key, value)?,
        "traffic.burst_gap_mean_s" => p.int_traffic.gap_mean = seconds(key, value)?,
        "traffic.burst_gap_cap_s" => p.int_traffic.gap_cap = seconds(key, value)?,
        "traffic.burst_count_mean" => p.int_traffic.count_mean = finite(key, value)?,
        "traffic.burst_count_cap" => p.int_traffic.count_cap = parse(key, value)?,
        "traffic.burst_spacing_s" => p.int_traffic.intra_spacing = seconds(key, value)?,
        "traffic.int_payload_bytes" => p.int_traffic.payload = parse(key, value)?,
        "geometry.ap_x" => p.geometry.ap.x = finite(key, value)?,
        "geometry.ap_y" => p.geometry.ap.y = finite(key, value)?,
        "geometry.visible_int_x" => p.geometry.visible_int.x = finite(key, value)?,
        "geometry.visible_int_y" => p.geometry.visible_int.y = finite(key, value)?,
        "geometry.hidden_int_x" => p.geometry.hidden_int.x = finite(key, value)?,
        "geometry.hidden_int_y" => p.geometry.hidden_int.y = finite(key, value)?,
        "geometry.track_min" => p.geometry.track_min = finite(key, value)?,
        "geometry.track_max" => p.geometry.track_max = finite(key, value)?,
        "error.data_per" => {
            p.errors = if value.eq_ignore_ascii_case("analytic") {
                ErrorModel::Analytic
            } else {
                let v = list::<f64>(key, value)?;
                let table: [f64; NUM_MCS] = match v.len() {
                    1 => [v[0]; NUM_MCS],
                    NUM_MCS => v.try_into().map_err(|_| bad())?,
                    _ => return Err(bad()),
                };
                ErrorModel::Fixed(table)
            };
        }
        "run.discard_warmup" => p.discard_warmup = parse(key, value)?,
        _ => return Err(Error::UnknownParameter(key.to_string())),
    }
    Ok(false)
}

/// Parses a parameter file over the defaults. `origin` names the source in
/// diagnostics.
pub fn parse_params(text: &str, origin: &str) -> Result<Params> {
    let mut params = Params::default();
    let mut thresholds_set = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigSyntax {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("expected `key = value`, found {line:?}"),
            });
        };
        thresholds_set |= apply_override(&mut params, key.trim(), value.trim())?;
    }
    if !thresholds_set {
        params.phy.calibrate_thresholds(&params.channel);
    }
    params.validate()?;
    Ok(params)
}

pub fn load_params(path: &Path) -> Result<Params> {
    let text = std::fs::read_to_string(path)?;
    parse_params(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(parse_params("# nothing\n\n", "t").unwrap(), Params::default());
    }

    #[test]
    fn overrides_apply() {
        let p = parse_params(
            "channel.exponent = 3.5  # steeper\n\
             minstrel.segments = 4,2,1,1\n\
             traffic.burst_gap_mean_s = 0.25\n\
             minstrel.update_interval_ms = 50\n\
             error.data_per = 0\n\
             run.discard_warmup = true\n",
            "t",
        )
        .unwrap();
        assert_eq!(p.channel.exponent, 3.5);
        assert_eq!(p.minstrel.segments, [4, 2, 1, 1]);
        assert_eq!(p.int_traffic.gap_mean, Duration::from_millis(250));
        assert_eq!(p.minstrel.update_interval, Duration::from_millis(50));
        assert_eq!(p.errors, ErrorModel::Fixed([0.0; NUM_MCS]));
        assert!(p.discard_warmup);
        // Recalibrated for the steeper loss law: still exactly d_max.
        let expected = p.phy.tx_power_dbm - p.channel.path_loss(p.channel.d_max_m);
        assert!((p.phy.rx_sensitivity_dbm - expected).abs() < 1e-12);
    }

    #[test]
    fn explicit_thresholds_survive() {
        let p = parse_params("phy.rx_sensitivity_dbm = -90\nphy.cs_threshold_dbm = -85\n", "t").unwrap();
        assert_eq!((p.phy.rx_sensitivity_dbm, p.phy.cs_threshold_dbm), (-90.0, -85.0));
    }

    #[test]
    fn errors_are_specific() {
        assert!(matches!(
            parse_params("nonsense\n", "f.cfg"),
            Err(Error::ConfigSyntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_params("phy.colour = 3\n", "t"),
            Err(Error::UnknownParameter(_))
        ));
        assert!(matches!(
            parse_params("channel.exponent = steep\n", "t"),
            Err(Error::InvalidValue { .. })
        ));
        assert!(matches!(
            parse_params("error.data_per = 0.1,0.2\n", "t"),
            Err(Error::InvalidValue { .. })
        ));
        assert!(parse_params("channel.exponent = -1\n", "t").is_err());
    }

    #[test]
    fn every_listed_key_is_accepted() {
        for key in KEYS {
            let value = match *key {
                "minstrel.segments" => "3,2,2,1",
                "error.data_per" => "analytic",
                "run.discard_warmup" => "false",
                _ => "1",
            };
            let mut p = Params::default();
            apply_override(&mut p, key, value).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
