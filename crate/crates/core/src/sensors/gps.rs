//! GPS: perturbed local position projected to latitude/longitude with the
//! inverse azimuthal equidistant projection on a spherical Earth.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{NoiseProcess, NoiseProcess3};
use super::{GeoOrigin, SensorError};
use crate::dynamics::RigidBodyState;
use crate::frames::Vec3;

pub const EARTH_RADIUS: f64 = 6_371_000.0;
/// Horizontal distance beyond which projection requests are rejected.
pub const MAX_PROJECTION_RANGE: f64 = 500_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsReading {
    /// deg
    pub latitude: f64,
    /// deg
    pub longitude: f64,
    /// m above mean sea level
    pub altitude: f64,
    /// m/s, ENU
    pub velocity: Vec3,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpsNoise {
    /// Position noise per ENU axis, m.
    pub position: NoiseProcess3,
}

impl Default for GpsNoise {
    fn default() -> Self {
        let horizontal = NoiseProcess::new(0.3, 0.0, 0.0);
        Self { position: NoiseProcess3 { x: horizontal, y: horizontal, z: NoiseProcess::new(0.3, 0.0, 0.0) } }
    }
}

impl GpsNoise {
    pub fn noiseless() -> Self {
        Self { position: NoiseProcess3::default() }
    }
}

/// Inverse azimuthal equidistant projection of local `(east, north)` metres
/// around `origin`. Returns `(latitude, longitude)` in degrees.
pub fn local_to_geodetic(east: f64, north: f64, origin: &GeoOrigin) -> Result<(f64, f64), SensorError> {
    if !east.is_finite() || !north.is_finite() {
        return Err(SensorError::NonFinite);
    }
    let rho = east.hypot(north);
    if rho >= MAX_PROJECTION_RANGE {
        return Err(SensorError::ProjectionRange(rho));
    }
    let lat0 = origin.latitude_deg.to_radians();
    let lon0 = origin.longitude_deg.to_radians();
    if rho == 0.0 {
        return Ok((origin.latitude_deg, origin.longitude_deg));
    }
    // angular distance to the origin
    let c = rho / EARTH_RADIUS;
    let (sin_c, cos_c) = c.sin_cos();
    let (sin_lat0, cos_lat0) = lat0.sin_cos();
    let lat = (cos_c * sin_lat0 + north * sin_c * cos_lat0 / rho).clamp(-1.0, 1.0).asin();
    let lon = lon0 + (east * sin_c).atan2(rho * cos_lat0 * cos_c - north * sin_lat0 * sin_c);
    Ok((lat.to_degrees(), wrap_degrees(lon.to_degrees())))
}

fn wrap_degrees(lon: f64) -> f64 {
    if lon > 180.0 {
        lon - 360.0
    } else if lon < -180.0 {
        lon + 360.0
    } else {
        lon
    }
}

pub fn gps_sample<R: Rng + ?Sized>(
    state: &RigidBodyState,
    origin: &GeoOrigin,
    noise: &mut GpsNoise,
    dt: f64,
    rng: &mut R,
) -> Result<GpsReading, SensorError> {
    let p = state.position + noise.position.sample(dt, rng);
    let (latitude, longitude) = local_to_geodetic(p.x, p.y, origin)?;
    Ok(GpsReading {
        latitude,
        longitude,
        altitude: p.z + origin.altitude_m,
        velocity: state.velocity,
        time: state.time,
    })
}
