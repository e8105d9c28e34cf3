//! Barometer, magnetometer, IMU and GPS models plus their rate scheduler.
//!
//! Every vehicle owns a [`SensorSuite`]; each sensor draws from its own
//! deterministic RNG stream so a run is reproducible bit-for-bit from the seed.

pub mod baro;
pub mod gps;
pub mod imu;
pub mod mag;
pub mod noise;
pub mod scheduler;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::RigidBodyState;
use crate::frames::Vec3;

pub use baro::{barometer_sample, BaroNoise, BaroReading};
pub use gps::{gps_sample, local_to_geodetic, GpsNoise, GpsReading};
pub use imu::{imu_sample, ImuNoise, ImuReading};
pub use mag::{magnetometer_sample, MagConfig, MagFieldMapping, MagReading};
pub use noise::{stream_rng, NoiseProcess, NoiseProcess3, SensorRng};
pub use scheduler::{scheduler_tick, SensorKind, SensorRates, SensorScheduler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("altitude {0} m outside the ISA troposphere model (max 11000 m)")]
    AltitudeOutOfRange(f64),
    #[error("horizontal distance {0} m from origin exceeds projection range")]
    ProjectionRange(f64),
    #[error("non-finite sensor input")]
    NonFinite,
    #[error("invalid {sensor} rate {rate} Hz")]
    InvalidRate { sensor: &'static str, rate: f64 },
    #[error("{sensor} rate {rate} Hz exceeds the physics rate")]
    RateAbovePhysics { sensor: &'static str, rate: f64 },
    #[error("invalid physics step {0}")]
    InvalidTimeStep(f64),
    #[error("invalid world origin: {0}")]
    InvalidOrigin(String),
    #[error("noise parameters must be finite and non-negative")]
    InvalidNoise,
}

/// World origin: geodetic anchor of the local ENU frame and the magnetic field there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeoOrigin {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// Altitude of the local origin above mean sea level, m.
    pub altitude_m: f64,
    pub declination_rad: f64,
    pub inclination_rad: f64,
    pub strength_gauss: f64,
}

impl Default for GeoOrigin {
    /// PX4 SITL's default home location, with an approximate local field.
    fn default() -> Self {
        Self {
            latitude_deg: 47.397742,
            longitude_deg: 8.545594,
            altitude_m: 488.0,
            declination_rad: 3.0_f64.to_radians(),
            inclination_rad: 63.5_f64.to_radians(),
            strength_gauss: 0.48,
        }
    }
}

impl GeoOrigin {
    pub fn validate(&self) -> Result<(), SensorError> {
        let bad = |m: &str| Err(SensorError::InvalidOrigin(m.to_string()));
        if !(self.latitude_deg.abs() < 90.0) {
            return bad("latitude must be within (-90, 90) degrees");
        }
        if !(self.longitude_deg.abs() <= 180.0) {
            return bad("longitude must be within [-180, 180] degrees");
        }
        if !self.altitude_m.is_finite() || self.altitude_m > baro::MAX_ALTITUDE {
            return bad("altitude must be finite and below 11000 m");
        }
        if !self.declination_rad.is_finite() || self.declination_rad.abs() > std::f64::consts::PI {
            return bad("declination must be within [-pi, pi]");
        }
        if !(self.inclination_rad.abs() < std::f64::consts::FRAC_PI_2) {
            return bad("inclination must be within (-pi/2, pi/2)");
        }
        if !(self.strength_gauss >= 0.0 && self.strength_gauss.is_finite()) {
            return bad("field strength must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SensorReading {
    Baro(BaroReading),
    Mag(MagReading),
    Imu(ImuReading),
    Gps(GpsReading),
}

impl SensorReading {
    pub fn kind(&self) -> SensorKind {
        match self {
            SensorReading::Baro(_) => SensorKind::Baro,
            SensorReading::Mag(_) => SensorKind::Mag,
            SensorReading::Imu(_) => SensorKind::Imu,
            SensorReading::Gps(_) => SensorKind::Gps,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            SensorReading::Baro(r) => r.time,
            SensorReading::Mag(r) => r.time,
            SensorReading::Imu(r) => r.time,
            SensorReading::Gps(r) => r.time,
        }
    }
}

/// Rates and noise parameters for one vehicle's sensors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub rates: SensorRates,
    pub baro: BaroNoise,
    pub mag: MagConfig,
    pub imu: ImuNoise,
    pub gps: GpsNoise,
}

impl SensorConfig {
    pub fn noiseless() -> Self {
        Self {
            rates: SensorRates::default(),
            baro: BaroNoise::noiseless(),
            mag: MagConfig { noise: NoiseProcess3::default(), ..MagConfig::default() },
            imu: ImuNoise::noiseless(),
            gps: GpsNoise::noiseless(),
        }
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        let ok = self.baro.sigma_pressure >= 0.0
            && self.baro.drift.is_valid()
            && self.mag.noise.is_valid()
            && self.imu.gyro.is_valid()
            && self.imu.accel.is_valid()
            && self.gps.position.is_valid();
        if ok {
            Ok(())
        } else {
            Err(SensorError::InvalidNoise)
        }
    }
}

/// Most recent reading of every sensor.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LatestReadings {
    pub baro: Option<BaroReading>,
    pub mag: Option<MagReading>,
    pub imu: Option<ImuReading>,
    pub gps: Option<GpsReading>,
}

impl LatestReadings {
    pub fn update(&mut self, r: &SensorReading) {
        match *r {
            SensorReading::Baro(b) => self.baro = Some(b),
            SensorReading::Mag(m) => self.mag = Some(m),
            SensorReading::Imu(i) => self.imu = Some(i),
            SensorReading::Gps(g) => self.gps = Some(g),
        }
    }
}

/// All sensors of one vehicle together with their scheduler and RNG streams.
#[derive(Debug, Clone)]
pub struct SensorSuite {
    config: SensorConfig,
    scheduler: SensorScheduler,
    rngs: [SensorRng; 4],
    gravity: f64,
}

impl SensorSuite {
    /// `vehicle_index` selects a disjoint block of RNG streams.
    pub fn new(
        config: SensorConfig,
        physics_dt: f64,
        seed: u64,
        vehicle_index: u64,
        gravity: f64,
    ) -> Result<Self, SensorError> {
        config.validate()?;
        let scheduler = SensorScheduler::new(config.rates, physics_dt)?;
        let rngs = SensorKind::ALL.map(|k| stream_rng(seed, vehicle_index * 8 + k as u64));
        Ok(Self { config, scheduler, rngs, gravity })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    /// Samples every sensor due at the end of physics step `step`.
    ///
    /// `accel_true` is the inertial acceleration at `state`.
    pub fn sample_due(
        &mut self,
        step: u64,
        state: &RigidBodyState,
        accel_true: Vec3,
        origin: &GeoOrigin,
    ) -> Result<Vec<SensorReading>, SensorError> {
        let due = self.scheduler.tick(step);
        let mut out = Vec::with_capacity(due.len());
        for kind in due {
            let dt = self.scheduler.period(kind);
            let rng = &mut self.rngs[kind as usize];
            let reading = match kind {
                SensorKind::Baro => SensorReading::Baro(barometer_sample(state, origin, &mut self.config.baro, dt, rng)?),
                SensorKind::Mag => SensorReading::Mag(magnetometer_sample(state, origin, &mut self.config.mag, dt, rng)),
                SensorKind::Imu => {
                    SensorReading::Imu(imu_sample(state, accel_true, self.gravity, &mut self.config.imu, dt, rng))
                }
                SensorKind::Gps => SensorReading::Gps(gps_sample(state, origin, &mut self.config.gps, dt, rng)?),
            };
            out.push(reading);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_reproducible() {
        let run = || {
            let mut suite = SensorSuite::new(SensorConfig::default(), 0.004, 42, 0, 9.81).unwrap();
            let origin = GeoOrigin::default();
            let s = RigidBodyState::at_rest(Vec3::new(1.0, 2.0, 3.0));
            let mut all = Vec::new();
            for n in 1..=500 {
                all.extend(suite.sample_due(n, &s, Vec3::ZERO, &origin).unwrap());
            }
            all
        };
        let a = run();
        assert_eq!(a.len(), 500 * 3 + 2);
        let b = run();
        let bits = |v: &[SensorReading]| format!("{v:?}");
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn vehicles_get_distinct_streams() {
        let origin = GeoOrigin::default();
        let s = RigidBodyState::default();
        let mut a = SensorSuite::new(SensorConfig::default(), 0.004, 42, 0, 9.81).unwrap();
        let mut b = SensorSuite::new(SensorConfig::default(), 0.004, 42, 1, 9.81).unwrap();
        assert_ne!(
            a.sample_due(1, &s, Vec3::ZERO, &origin).unwrap(),
            b.sample_due(1, &s, Vec3::ZERO, &origin).unwrap()
        );
    }

    #[test]
    fn origin_validation() {
        GeoOrigin::default().validate().unwrap();
        assert!(GeoOrigin { latitude_deg: 95.0, ..GeoOrigin::default() }.validate().is_err());
        assert!(GeoOrigin { inclination_rad: 1.6, ..GeoOrigin::default() }.validate().is_err());
    }
}
