//! Gyroscope and accelerometer with white noise and random-walk biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{NoiseProcess, NoiseProcess3};
use crate::dynamics::RigidBodyState;
use crate::frames::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuReading {
    /// rad/s, body FLU
    pub gyro: Vec3,
    /// Specific force, m/s², body FLU
    pub accel: Vec3,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImuNoise {
    pub gyro: NoiseProcess3,
    pub accel: NoiseProcess3,
}

impl Default for ImuNoise {
    fn default() -> Self {
        Self {
            gyro: NoiseProcess3::uniform(NoiseProcess::new(0.0003, 0.00004, 0.0)),
            accel: NoiseProcess3::uniform(NoiseProcess::new(0.02, 0.0006, 0.0)),
        }
    }
}

impl ImuNoise {
    pub fn noiseless() -> Self {
        Self { gyro: NoiseProcess3::default(), accel: NoiseProcess3::default() }
    }
}

/// `accel_true` is the inertial acceleration v̇; the accelerometer reports
/// the body-frame specific force `q⁻¹ ⊙ (v̇ + g·e3)`.
pub fn imu_sample<R: Rng + ?Sized>(
    state: &RigidBodyState,
    accel_true: Vec3,
    gravity: f64,
    noise: &mut ImuNoise,
    dt: f64,
    rng: &mut R,
) -> ImuReading {
    let gyro = state.angular_velocity + noise.gyro.sample(dt, rng);
    let specific = state.attitude.rotate_inverse(accel_true + Vec3::new(0.0, 0.0, gravity));
    let accel = specific + noise.accel.sample(dt, rng);
    ImuReading { gyro, accel, time: state.time }
}
