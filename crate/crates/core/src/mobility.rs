//! Where the station under test is at any simulated time, and which 1 m
//! reporting bin that position falls in.

use crate::channel::Point;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Static(Point),
    /// Constant-speed shuttle along the x axis, `x_min -> x_max -> x_min`,
    /// repeated forever.
    Triangle {
        speed: f64,
        x_min: f64,
        x_max: f64,
        orthogonal_offset: f64,
    },
}

impl Trajectory {
    pub fn shuttle(speed: f64, x_min: f64, x_max: f64) -> Result<Self> {
        if !(speed > 0.0 && x_max > x_min) {
            return Err(Error::InvalidScenario(format!(
                "shuttle needs speed > 0 and x_max > x_min (got {speed}, [{x_min}, {x_max}])"
            )));
        }
        Ok(Trajectory::Triangle {
            speed,
            x_min,
            x_max,
            orthogonal_offset: 0.0,
        })
    }

    /// Duration of one out-and-back trip; `None` for a static node.
    pub fn period(&self) -> Option<f64> {
        match *self {
            Trajectory::Static(_) => None,
            Trajectory::Triangle { speed, x_min, x_max, .. } => Some(2.0 * (x_max - x_min) / speed),
        }
    }

    pub fn position_at(&self, t: f64) -> Point {
        debug_assert!(t >= 0.0);
        match *self {
            Trajectory::Static(p) => p,
            Trajectory::Triangle {
                speed,
                x_min,
                x_max,
                orthogonal_offset,
            } => {
                let span = x_max - x_min;
                let s = (speed * t).rem_euclid(2.0 * span);
                let x = if s <= span { x_min + s } else { x_min + 2.0 * span - s };
                Point::new(x, orthogonal_offset)
            }
        }
    }
}

/// Nearest whole meter, halves rounding up.
pub fn bin_of(x: f64) -> u32 {
    debug_assert!(x >= -0.5, "position {x} left the track");
    (x + 0.5).floor().max(0.0) as u32
}

/// Round trips needed so each interior 1 m bin accumulates at least
/// `target_dwell` seconds of presence. Each trip crosses every interior bin
/// twice, spending `1 / speed` seconds per crossing.
pub fn dwell_repetitions(speed: f64, target_dwell: f64) -> Result<u64> {
    if !(speed > 0.0 && target_dwell > 0.0) {
        return Err(Error::InvalidScenario(format!(
            "dwell needs speed > 0 and a positive target (got {speed}, {target_dwell})"
        )));
    }
    // Absorb representation error such as 600 * 0.1 = 60.00000000000001.
    let trips = target_dwell * speed / 2.0;
    Ok((trips - 1e-9).ceil().max(1.0) as u64)
}
