//! Conversions between simulator readings (ENU/FLU, SI) and HIL messages (NED/FRD, MAVLink units).

use crate::frames::{convert_body, convert_inertial, BodyFrame, InertialFrame, Vec3};
use crate::sensors::{BaroReading, GpsReading, ImuReading, MagReading};

use super::messages::{HilGps, HilMessage, HilSensor};

/// `fields_updated` bits of HIL_SENSOR.
pub mod fields {
    pub const ACCEL: u32 = 0b111;
    pub const GYRO: u32 = 0b111 << 3;
    pub const MAG: u32 = 0b111 << 6;
    pub const ABS_PRESSURE: u32 = 1 << 9;
    pub const DIFF_PRESSURE: u32 = 1 << 10;
    pub const PRESSURE_ALT: u32 = 1 << 11;
    pub const TEMPERATURE: u32 = 1 << 12;
    pub const BARO: u32 = ABS_PRESSURE | PRESSURE_ALT | TEMPERATURE;
    pub const ALL: u32 = 0x1fff;
}

const KELVIN_OFFSET: f64 = 273.15;

pub fn time_usec(t: f64) -> u64 {
    (t.max(0.0) * 1e6).round() as u64
}

fn frd(v: Vec3) -> [f32; 3] {
    let c = convert_body(v, BodyFrame::Flu, BodyFrame::Frd);
    [c.x as f32, c.y as f32, c.z as f32]
}

fn flu(v: [f32; 3]) -> Vec3 {
    convert_body(Vec3::new(v[0] as f64, v[1] as f64, v[2] as f64), BodyFrame::Frd, BodyFrame::Flu)
}

/// Packs one IMU/mag/baro batch into HIL_SENSOR with all fields marked updated.
pub fn build_hil_sensor(baro: &BaroReading, imu: &ImuReading, mag: &MagReading) -> HilMessage {
    HilMessage::HilSensor(HilSensor {
        time_usec: time_usec(imu.time),
        acc: frd(imu.accel),
        gyro: frd(imu.gyro),
        mag: frd(mag.field),
        abs_pressure: (baro.pressure / 100.0) as f32,
        diff_pressure: 0.0,
        pressure_alt: baro.pressure_altitude as f32,
        temperature: (baro.temperature - KELVIN_OFFSET) as f32,
        fields_updated: fields::ALL,
        id: 0,
    })
}

/// Inverse of [`build_hil_sensor`] up to `f32` precision.
pub fn readings_from_hil_sensor(m: &HilSensor) -> (BaroReading, ImuReading, MagReading) {
    let t = m.time_usec as f64 * 1e-6;
    (
        BaroReading {
            temperature: m.temperature as f64 + KELVIN_OFFSET,
            pressure: m.abs_pressure as f64 * 100.0,
            pressure_altitude: m.pressure_alt as f64,
            time: t,
        },
        ImuReading { gyro: flu(m.gyro), accel: flu(m.acc), time: t },
        MagReading { field: flu(m.mag), time: t },
    )
}

/// Packs a GPS fix. Velocity is converted ENU → NED in cm/s.
pub fn build_hil_gps(gps: &GpsReading) -> HilMessage {
    let ned = convert_inertial(gps.velocity, InertialFrame::Enu, InertialFrame::Ned);
    let cm = |v: f64| (v * 100.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
    let ground = ned.x.hypot(ned.y);
    let cog = if ground > 1e-3 {
        let deg = ned.y.atan2(ned.x).to_degrees().rem_euclid(360.0);
        ((deg * 100.0).round() as u32 % 36000) as u16
    } else {
        u16::MAX
    };
    HilMessage::HilGps(HilGps {
        time_usec: time_usec(gps.time),
        lat: (gps.latitude * 1e7).round() as i32,
        lon: (gps.longitude * 1e7).round() as i32,
        alt: (gps.altitude * 1000.0).round() as i32,
        eph: 100,
        epv: 100,
        vel: (ground * 100.0).round().min(u16::MAX as f64 - 1.0) as u16,
        vn: cm(ned.x),
        ve: cm(ned.y),
        vd: cm(ned.z),
        cog,
        fix_type: 3,
        satellites_visible: 10,
        id: 0,
        yaw: 0,
    })
}

/// Maps normalized actuator outputs in [0, 1] linearly onto `[0, max_speed]`.
/// Out-of-range or non-finite controls are clamped to the interval.
pub fn controls_to_speeds(controls: &[f32], rotor_count: usize, max_speed: f64) -> Vec<f64> {
    (0..rotor_count)
        .map(|i| {
            let c = controls.get(i).copied().unwrap_or(0.0) as f64;
            let c = if c.is_finite() { c.clamp(0.0, 1.0) } else { 0.0 };
            c * max_speed
        })
        .collect()
}
