//! Flat-output references: hover points and the Gaussian relay manoeuvre.

use serde::{Deserialize, Serialize};

use super::ControlError;
use crate::frames::Vec3;

/// Position and yaw with the derivatives a flatness-based controller needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlatReference {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub jerk: Vec3,
    pub yaw: f64,
    pub yaw_rate: f64,
}

impl FlatReference {
    pub fn hover(position: Vec3, yaw: f64) -> Self {
        Self { position, yaw, ..Default::default() }
    }
}

/// Relay manoeuvre at parametric time `t`:
/// `x = t`, `y = g(t)`, `z = 1 + g(t)` with `g(t) = e^{-½(t/s)²} / s`.
/// Smaller `s` is more aggressive.
pub fn relay_trajectory(t: f64, s: f64) -> Result<FlatReference, ControlError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(ControlError::InvalidAggressiveness(s));
    }
    if !t.is_finite() {
        return Err(ControlError::NonFinite);
    }
    let s2 = s * s;
    let g = (-0.5 * t * t / s2).exp() / s;
    let g1 = -t / s2 * g;
    let g2 = (t * t / (s2 * s2) - 1.0 / s2) * g;
    let g3 = (3.0 * t / (s2 * s2) - t * t * t / (s2 * s2 * s2)) * g;
    Ok(FlatReference {
        position: Vec3::new(t, g, 1.0 + g),
        velocity: Vec3::new(1.0, g1, g1),
        acceleration: Vec3::new(0.0, g2, g2),
        jerk: Vec3::new(0.0, g3, g3),
        yaw: 0.0,
        yaw_rate: 0.0,
    })
}

/// Maps simulation time to a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSource {
    Hover {
        position: Vec3,
        #[serde(default)]
        yaw: f64,
    },
    /// Relay manoeuvre with parametric time `t = sim_time + t_start`.
    Relay {
        #[serde(default = "default_aggressiveness")]
        s: f64,
        /// Parametric time at simulation start; the manoeuvre window is `[t_start, t_end]`.
        #[serde(default = "default_t_start")]
        t_start: f64,
        #[serde(default = "default_t_end")]
        t_end: f64,
        /// Negate the lateral (y) component, for the second vehicle of the pair.
        #[serde(default)]
        mirror_y: bool,
        #[serde(default)]
        offset: Vec3,
    },
}

fn default_aggressiveness() -> f64 {
    0.6
}
fn default_t_start() -> f64 {
    -3.0
}
fn default_t_end() -> f64 {
    3.0
}

impl ReferenceSource {
    pub fn relay(s: f64, mirror_y: bool, offset: Vec3) -> Self {
        ReferenceSource::Relay { s, t_start: -3.0, t_end: 3.0, mirror_y, offset }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        match self {
            ReferenceSource::Hover { position, yaw } => {
                if position.is_finite() && yaw.is_finite() {
                    Ok(())
                } else {
                    Err(ControlError::NonFinite)
                }
            }
            ReferenceSource::Relay { s, t_start, t_end, offset, .. } => {
                if !(*s > 0.0) {
                    return Err(ControlError::InvalidAggressiveness(*s));
                }
                if !(t_start < t_end) || !offset.is_finite() {
                    return Err(ControlError::NonFinite);
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, sim_time: f64) -> Result<FlatReference, ControlError> {
        match *self {
            ReferenceSource::Hover { position, yaw } => Ok(FlatReference::hover(position, yaw)),
            ReferenceSource::Relay { s, t_start, mirror_y, offset, .. } => {
                let mut r = relay_trajectory(sim_time + t_start, s)?;
                if mirror_y {
                    r.position.y = -r.position.y;
                    r.velocity.y = -r.velocity.y;
                    r.acceleration.y = -r.acceleration.y;
                    r.jerk.y = -r.jerk.y;
                }
                r.position += offset;
                Ok(r)
            }
        }
    }

    /// Simulation-time interval of the aggressive segment, if the reference has one.
    pub fn maneuver_window(&self) -> Option<(f64, f64)> {
        match *self {
            ReferenceSource::Hover { .. } => None,
            ReferenceSource::Relay { t_start, t_end, .. } => Some((0.0, t_end - t_start)),
        }
    }
}
