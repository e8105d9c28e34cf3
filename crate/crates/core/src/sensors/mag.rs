//! Magnetometer from a constant declination / inclination / strength field.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::NoiseProcess3;
use super::GeoOrigin;
use crate::dynamics::RigidBodyState;
use crate::frames::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagReading {
    /// Gauss, body FLU
    pub field: Vec3,
    pub time: f64,
}

/// How the `(S_X, S_Y, S_Z)` field components map onto the inertial ENU frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagFieldMapping {
    /// Components are north, east, down; mapped to (east, north, up).
    #[default]
    NorthEastDown,
    /// Components are used as ENU without remapping.
    Verbatim,
}

impl MagFieldMapping {
    pub fn to_enu(self, c: Vec3) -> Vec3 {
        match self {
            MagFieldMapping::NorthEastDown => Vec3::new(c.y, c.x, -c.z),
            MagFieldMapping::Verbatim => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagConfig {
    pub noise: NoiseProcess3,
    pub mapping: MagFieldMapping,
}

impl Default for MagConfig {
    fn default() -> Self {
        Self {
            noise: NoiseProcess3::uniform(super::noise::NoiseProcess::white(0.005)),
            mapping: MagFieldMapping::default(),
        }
    }
}

/// Noiseless `(S_X, S_Y, S_Z)`: horizontal intensity split by declination,
/// vertical component from inclination.
pub fn field_components(origin: &GeoOrigin) -> Vec3 {
    let h = origin.strength_gauss * origin.inclination_rad.cos();
    Vec3::new(
        h * origin.declination_rad.cos(),
        h * origin.declination_rad.sin(),
        h * origin.inclination_rad.tan(),
    )
}

pub fn magnetometer_sample<R: Rng + ?Sized>(
    state: &RigidBodyState,
    origin: &GeoOrigin,
    config: &mut MagConfig,
    dt: f64,
    rng: &mut R,
) -> MagReading {
    let components = field_components(origin) + config.noise.sample(dt, rng);
    let inertial = config.mapping.to_enu(components);
    MagReading { field: state.attitude.rotate_inverse(inertial), time: state.time }
}
