//! Browser bindings. Each export returns a JSON string built by a plain
//! function of the same name in [`demo`], so the logic is testable natively.

use wasm_bindgen::prelude::*;

pub mod demo {
    use minstrel_sim::channel::{ChannelParams, Point};
    use minstrel_sim::engine::{MobilityScenario, NetworkConfig, Params};
    use minstrel_sim::harness::{simulate, Metric};
    use minstrel_sim::phy::{per, snr, Mcs, PhyParams};
    use serde_json::{json, Value};

    /// Longest dwell the page may request; keeps a run to a few seconds.
    pub const MAX_DWELL_S: f64 = 60.0;

    /// PER against SNR for every MCS at one frame size.
    pub fn per_curves(psdu_bytes: u32, snr_min: f64, snr_max: f64, step: f64) -> Result<Value, String> {
        if psdu_bytes == 0 || !(step > 0.0) || !(snr_max > snr_min) {
            return Err("need psdu_bytes > 0, step > 0 and snr_max > snr_min".into());
        }
        let n = ((snr_max - snr_min) / step).floor() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|i| snr_min + i as f64 * step).collect();
        let curves: Vec<Value> = Mcs::all()
            .map(|m| {
                json!({
                    "mcs": m.index(),
                    "label": m.to_string(),
                    "per": grid.iter().map(|&s| per(m.entry(), s, psdu_bytes)).collect::<Vec<_>>(),
                })
            })
            .collect();
        Ok(json!({ "psdu_bytes": psdu_bytes, "snr_db": grid, "curves": curves }))
    }

    /// Received power, SNR and the fastest MCS under `target_per` along the
    /// track from the AP.
    pub fn link_budget(max_distance: f64, step: f64, psdu_bytes: u32, target_per: f64) -> Result<Value, String> {
        if !(max_distance > 0.0) || !(step > 0.0) || psdu_bytes == 0 || !(0.0..=1.0).contains(&target_per) {
            return Err("need max_distance > 0, step > 0, psdu_bytes > 0 and target_per in [0, 1]".into());
        }
        let chan = ChannelParams::default();
        let phy = PhyParams::calibrated(&chan);
        let noise = phy.noise_floor_dbm();
        let n = (max_distance / step).floor() as usize;
        let points: Vec<Value> = (1..=n)
            .map(|i| {
                let d = i as f64 * step;
                let rx = chan.rx_power(phy.tx_power_dbm, Point::ORIGIN, Point::new(d, 0.0));
                let s = snr(rx, noise);
                let best = if rx < phy.rx_sensitivity_dbm {
                    None
                } else {
                    Mcs::all().rev().find(|m| per(m.entry(), s, psdu_bytes) <= target_per).map(|m| m.index())
                };
                json!({ "distance_m": d, "rx_dbm": rx, "snr_db": s, "best_mcs": best })
            })
            .collect();
        Ok(json!({
            "sensitivity_dbm": phy.rx_sensitivity_dbm,
            "cs_threshold_dbm": phy.cs_threshold_dbm,
            "noise_dbm": noise,
            "points": points,
        }))
    }

    /// A short sweep: per-bin PLR, mean and p99 latency for one scenario.
    pub fn run(network: &str, mobility: &str, dwell_s: f64, seed: u64) -> Result<Value, String> {
        let network: NetworkConfig = network.parse().map_err(|e| format!("{e}"))?;
        let mobility: MobilityScenario = mobility.parse().map_err(|e| format!("{e}"))?;
        if !(dwell_s > 0.0 && dwell_s <= MAX_DWELL_S) {
            return Err(format!("dwell must be in (0, {MAX_DWELL_S}] s"));
        }
        let r = simulate(network, mobility, dwell_s, seed, &Params::default(), false, false).map_err(|e| format!("{e}"))?;
        let rows: Vec<Value> = r
            .rows()
            .iter()
            .map(|row| {
                let mut v = json!({ "bin_m": row.bin, "n_generated": row.n_generated, "n_dropped": row.n_dropped });
                for m in Metric::ALL {
                    v[m.column()] = json!(m.value(row));
                }
                v
            })
            .collect();
        let sut = r.sources.first().copied();
        Ok(json!({
            "network": network.name(),
            "mobility": mobility.name(),
            "dwell_s": dwell_s,
            "seed": seed,
            "generated": sut.map(|s| s.generated),
            "acked": sut.map(|s| s.acked),
            "rows": rows,
        }))
    }
}

fn export(v: Result<serde_json::Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn per_curves(psdu_bytes: u32, snr_min: f64, snr_max: f64, step: f64) -> Result<String, JsValue> {
    export(demo::per_curves(psdu_bytes, snr_min, snr_max, step))
}

#[wasm_bindgen]
pub fn link_budget(max_distance: f64, step: f64, psdu_bytes: u32, target_per: f64) -> Result<String, JsValue> {
    export(demo::link_budget(max_distance, step, psdu_bytes, target_per))
}

#[wasm_bindgen]
pub fn simulate(network: &str, mobility: &str, dwell_s: f64, seed: u64) -> Result<String, JsValue> {
    export(demo::run(network, mobility, dwell_s, seed))
}
