//! Decides which sensors sample on each physics tick.
//!
//! Sensor `s` with rate `r` takes its k-th sample (k = 1, 2, ...) on the first
//! tick whose time reaches `k / r`. Nothing is sampled at t = 0.

use serde::{Deserialize, Serialize};

use super::SensorError;

/// Order doubles as the tie-break order for sensors due on the same tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Baro,
    Mag,
    Imu,
    Gps,
}

impl SensorKind {
    pub const ALL: [SensorKind; 4] = [SensorKind::Baro, SensorKind::Mag, SensorKind::Imu, SensorKind::Gps];

    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Baro => "baro",
            SensorKind::Mag => "mag",
            SensorKind::Imu => "imu",
            SensorKind::Gps => "gps",
        }
    }
}

/// Sampling rates in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorRates {
    pub baro: f64,
    pub mag: f64,
    pub imu: f64,
    pub gps: f64,
}

impl Default for SensorRates {
    fn default() -> Self {
        Self { baro: 250.0, mag: 250.0, imu: 250.0, gps: 1.0 }
    }
}

impl SensorRates {
    pub fn rate(&self, kind: SensorKind) -> f64 {
        match kind {
            SensorKind::Baro => self.baro,
            SensorKind::Mag => self.mag,
            SensorKind::Imu => self.imu,
            SensorKind::Gps => self.gps,
        }
    }
}

// Relative slack on the due-time comparison, absorbs products like 250 * 0.004.
const DUE_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SensorScheduler {
    physics_dt: f64,
    rates: SensorRates,
    next_index: [u64; 4],
}

impl SensorScheduler {
    pub fn new(rates: SensorRates, physics_dt: f64) -> Result<Self, SensorError> {
        if !(physics_dt > 0.0 && physics_dt.is_finite()) {
            return Err(SensorError::InvalidTimeStep(physics_dt));
        }
        for kind in SensorKind::ALL {
            let r = rates.rate(kind);
            if !(r > 0.0 && r.is_finite()) {
                return Err(SensorError::InvalidRate { sensor: kind.name(), rate: r });
            }
            // at most one sample per tick
            if r * physics_dt > 1.0 + DUE_EPS {
                return Err(SensorError::RateAbovePhysics { sensor: kind.name(), rate: r });
            }
        }
        Ok(Self { physics_dt, rates, next_index: [1; 4] })
    }

    pub fn rates(&self) -> &SensorRates {
        &self.rates
    }

    /// Sample period of `kind`, s.
    pub fn period(&self, kind: SensorKind) -> f64 {
        1.0 / self.rates.rate(kind)
    }

    /// Sensors due at the end of physics step `step` (time `step · dt`), in tie-break order.
    pub fn tick(&mut self, step: u64) -> Vec<SensorKind> {
        let t = step as f64 * self.physics_dt;
        let mut due = Vec::with_capacity(4);
        for (i, kind) in SensorKind::ALL.into_iter().enumerate() {
            let r = self.rates.rate(kind);
            if t * r >= self.next_index[i] as f64 - DUE_EPS {
                due.push(kind);
                self.next_index[i] += 1;
            }
        }
        due
    }
}

/// Stateless form: the sensors whose sampling instant falls on tick `step`.
pub fn scheduler_tick(step: u64, physics_dt: f64, rates: &SensorRates) -> Result<Vec<SensorKind>, SensorError> {
    SensorScheduler::new(*rates, physics_dt)?;
    let sample_count = |kind: SensorKind, n: u64| -> u64 {
        ((n as f64 * physics_dt * rates.rate(kind)) + DUE_EPS).floor() as u64
    };
    if step == 0 {
        return Ok(Vec::new());
    }
    Ok(SensorKind::ALL
        .into_iter()
        .filter(|&k| sample_count(k, step) > sample_count(k, step - 1))
        .collect())
}
