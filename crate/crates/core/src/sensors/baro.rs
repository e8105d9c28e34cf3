//! International Standard Atmosphere barometer (troposphere only).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::NoiseProcess;
use super::{GeoOrigin, SensorError};
use crate::dynamics::{RigidBodyState, GRAVITY};

pub const SEA_LEVEL_TEMPERATURE: f64 = 288.15;
pub const SEA_LEVEL_PRESSURE: f64 = 101_325.0;
pub const LAPSE_RATE: f64 = 0.0065;
pub const PRESSURE_EXPONENT: f64 = 5.2561;
pub const AIR_DENSITY: f64 = 1.293;
pub const MAX_ALTITUDE: f64 = 11_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaroReading {
    /// K
    pub temperature: f64,
    /// Pa
    pub pressure: f64,
    /// m
    pub pressure_altitude: f64,
    pub time: f64,
}

/// Barometer noise: `white` is the per-sample pressure noise `w` (Pa), the
/// random walk of `drift` is the slow bias `d` (Pa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaroNoise {
    pub sigma_pressure: f64,
    pub drift: NoiseProcess,
}

impl Default for BaroNoise {
    fn default() -> Self {
        Self { sigma_pressure: 1.0, drift: NoiseProcess::default() }
    }
}

impl BaroNoise {
    pub fn noiseless() -> Self {
        Self { sigma_pressure: 0.0, drift: NoiseProcess::default() }
    }
}

/// ISA temperature (K) and pressure (Pa) at altitude `h` metres.
pub fn isa(h: f64) -> Result<(f64, f64), SensorError> {
    if !h.is_finite() || h > MAX_ALTITUDE {
        return Err(SensorError::AltitudeOutOfRange(h));
    }
    let t = SEA_LEVEL_TEMPERATURE - LAPSE_RATE * h;
    let p = SEA_LEVEL_PRESSURE / (SEA_LEVEL_TEMPERATURE / t).powf(PRESSURE_EXPONENT);
    Ok((t, p))
}

pub fn barometer_sample<R: Rng + ?Sized>(
    state: &RigidBodyState,
    origin: &GeoOrigin,
    noise: &mut BaroNoise,
    dt: f64,
    rng: &mut R,
) -> Result<BaroReading, SensorError> {
    let h = state.position.z + origin.altitude_m;
    let (temperature, p_isa) = isa(h)?;
    let w = noise.sigma_pressure * rng.sample::<f64, _>(rand_distr::StandardNormal);
    let d = noise.drift.sample(dt, rng);
    Ok(BaroReading {
        temperature,
        pressure: p_isa + w + d,
        pressure_altitude: h - w / (GRAVITY * AIR_DENSITY),
        time: state.time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Vec3;
    use crate::sensors::noise::stream_rng;

    fn sample_at(h: f64, noise: &mut BaroNoise) -> Result<BaroReading, SensorError> {
        let origin = GeoOrigin { altitude_m: 0.0, ..GeoOrigin::default() };
        let s = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, h));
        barometer_sample(&s, &origin, noise, 0.004, &mut stream_rng(0, 0))
    }

    #[test]
    fn sea_level() {
        let r = sample_at(0.0, &mut BaroNoise::noiseless()).unwrap();
        assert_eq!(r.temperature, 288.15);
        assert_eq!(r.pressure, 101325.0);
        assert_eq!(r.pressure_altitude, 0.0);
    }

    #[test]
    fn one_kilometre() {
        let r = sample_at(1000.0, &mut BaroNoise::noiseless()).unwrap();
        assert!((r.temperature - 281.65).abs() < 1e-12);
        // 40-digit evaluation of the ISA pressure law
        assert!((r.pressure - 89_874.111_405_900_37).abs() < 1e-6, "{}", r.pressure);
        assert_eq!(r.pressure_altitude, 1000.0);
    }

    #[test]
    fn origin_altitude_is_added() {
        let origin = GeoOrigin { altitude_m: 400.0, ..GeoOrigin::default() };
        let s = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, 100.0));
        let r = barometer_sample(&s, &origin, &mut BaroNoise::noiseless(), 0.004, &mut stream_rng(0, 0)).unwrap();
        assert!((r.pressure - 95_460.596_916_677_49).abs() < 1e-6);
    }

    #[test]
    fn above_troposphere_is_rejected() {
        assert_eq!(sample_at(11_000.5, &mut BaroNoise::noiseless()), Err(SensorError::AltitudeOutOfRange(11_000.5)));
        assert!(sample_at(11_000.0, &mut BaroNoise::noiseless()).is_ok());
    }

    #[test]
    fn pressure_decreases_with_altitude() {
        let mut prev = f64::INFINITY;
        for i in 0..=1100 {
            let (_, p) = isa(i as f64 * 10.0).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn pressure_altitude_tracks_white_noise_only() {
        let mut noise = BaroNoise { sigma_pressure: 2.0, drift: NoiseProcess::new(0.0, 0.0, 5.0) };
        let r = sample_at(100.0, &mut noise).unwrap();
        let (_, p_isa) = isa(100.0).unwrap();
        let w = r.pressure - p_isa - 5.0;
        assert!((r.pressure_altitude - (100.0 - w / (GRAVITY * AIR_DENSITY))).abs() < 1e-9);
    }
}
