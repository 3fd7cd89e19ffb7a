//! UAV flight tracks made of straight legs.

use serde::{Deserialize, Serialize};

use crate::channel::Point3;
use crate::error::{Error, Result};

/// Hard limits on transmitter height, m.
pub const TX_HEIGHT_LIMITS_M: (f64, f64) = (1.0, 500.0);
/// Height envelope the built-in scenarios were measured in, m.
pub const MEASURED_HEIGHT_M: (f64, f64) = (5.0, 80.0);
pub const DEFAULT_RX_HEIGHT_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LegKind {
    Vertical,
    Horizontal,
    #[default]
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub start: Point3,
    pub end: Point3,
    pub step_m: f64,
    #[serde(default)]
    pub kind: LegKind,
}

impl Leg {
    pub fn vertical(x: f64, y: f64, z_start: f64, z_end: f64, step_m: f64) -> Self {
        Leg {
            start: Point3::new(x, y, z_start),
            end: Point3::new(x, y, z_end),
            step_m,
            kind: LegKind::Vertical,
        }
    }

    pub fn horizontal(start: Point3, end: Point3, step_m: f64) -> Self {
        Leg {
            start,
            end,
            step_m,
            kind: LegKind::Horizontal,
        }
    }
}

fn default_rx() -> Point3 {
    Point3::new(0.0, 0.0, DEFAULT_RX_HEIGHT_M)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    #[serde(default = "default_rx")]
    pub rx_position: Point3,
    pub legs: Vec<Leg>,
}

impl TrajectorySpec {
    pub fn new(legs: Vec<Leg>) -> Self {
        TrajectorySpec {
            rx_position: default_rx(),
            legs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rx_position.is_finite() {
            return Err(Error::invalid("trajectory.rx_position", "must be finite"));
        }
        if self.legs.is_empty() {
            return Err(Error::EmptyLegs);
        }
        for (i, leg) in self.legs.iter().enumerate() {
            if !(leg.step_m > 0.0) || !leg.step_m.is_finite() {
                return Err(Error::invalid(
                    "trajectory.legs.step_m",
                    format!("leg {i}: step must be positive, got {}", leg.step_m),
                ));
            }
            if !leg.start.is_finite() || !leg.end.is_finite() {
                return Err(Error::invalid(
                    "trajectory.legs",
                    format!("leg {i}: non-finite endpoint"),
                ));
            }
            match leg.kind {
                LegKind::Vertical if leg.start.x != leg.end.x || leg.start.y != leg.end.y => {
                    return Err(Error::invalid(
                        "trajectory.legs.kind",
                        format!("leg {i} is vertical but moves horizontally"),
                    ));
                }
                LegKind::Horizontal if leg.start.z != leg.end.z => {
                    return Err(Error::invalid(
                        "trajectory.legs.kind",
                        format!("leg {i} is horizontal but changes height"),
                    ));
                }
                _ => {}
            }
            for p in [leg.start, leg.end] {
                let (lo, hi) = TX_HEIGHT_LIMITS_M;
                if p.z < lo || p.z > hi {
                    return Err(Error::invalid(
                        "trajectory.legs",
                        format!("leg {i}: TX height {} m outside [{lo}, {hi}] m", p.z),
                    ));
                }
                let (mlo, mhi) = MEASURED_HEIGHT_M;
                if p.z < mlo || p.z > mhi {
                    log::warn!(
                        "leg {i}: TX height {} m is outside the measured {mlo}-{mhi} m envelope",
                        p.z
                    );
                }
            }
        }
        Ok(())
    }
}

/// A transmitter position and its along-track distance from the start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub tx: Point3,
    pub track_m: f64,
}

/// Samples every leg at `step_m`, endpoints included. A leg that starts
/// where the previous one ended does not repeat that point; a gap between
/// legs is flown straight and its length added to the track distance.
pub fn build_trajectory(spec: &TrajectorySpec) -> Result<Vec<TrackPoint>> {
    spec.validate()?;
    let mut out: Vec<TrackPoint> = Vec::new();
    for leg in &spec.legs {
        let length = leg.start.distance(&leg.end);
        let base = match out.last() {
            None => 0.0,
            Some(prev) => prev.track_m + prev.tx.distance(&leg.start),
        };
        let full_steps = (length / leg.step_m + 1e-9).floor() as usize;
        let mut offsets: Vec<f64> = (0..=full_steps).map(|i| i as f64 * leg.step_m).collect();
        if length - offsets[full_steps] > 1e-9 * length.max(1.0) {
            offsets.push(length);
        } else {
            offsets[full_steps] = length;
        }
        for s in offsets {
            let tx = if length > 0.0 {
                leg.start.lerp(&leg.end, s / length)
            } else {
                leg.start
            };
            let track_m = base + s;
            if let Some(prev) = out.last() {
                if track_m <= prev.track_m {
                    continue;
                }
            }
            out.push(TrackPoint { tx, track_m });
        }
    }
    Ok(out)
}
