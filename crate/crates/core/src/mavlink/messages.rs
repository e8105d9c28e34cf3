//! The HIL message set and its payload serialization (wire order, little endian).

use serde::{Deserialize, Serialize};

use super::defs::{self, HEARTBEAT_ID, HIL_ACTUATOR_CONTROLS_ID, HIL_GPS_ID, HIL_SENSOR_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Heartbeat {
    pub custom_mode: u32,
    pub mav_type: u8,
    pub autopilot: u8,
    pub base_mode: u8,
    pub system_status: u8,
    pub mavlink_version: u8,
}

impl Heartbeat {
    /// Heartbeat announcing a generic simulator component.
    pub fn simulator() -> Self {
        Self {
            custom_mode: 0,
            mav_type: 2,     // MAV_TYPE_QUADROTOR
            autopilot: 8,    // MAV_AUTOPILOT_INVALID
            base_mode: 0,
            system_status: 4, // MAV_STATE_ACTIVE
            mavlink_version: 3,
        }
    }
}

/// Raw IMU, magnetometer and barometer data. Vectors are body FRD.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HilSensor {
    pub time_usec: u64,
    /// m/s²
    pub acc: [f32; 3],
    /// rad/s
    pub gyro: [f32; 3],
    /// Gauss
    pub mag: [f32; 3],
    /// hPa
    pub abs_pressure: f32,
    /// hPa
    pub diff_pressure: f32,
    /// m
    pub pressure_alt: f32,
    /// °C
    pub temperature: f32,
    pub fields_updated: u32,
    pub id: u8,
}

/// Position fix. Velocities are NED.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HilGps {
    pub time_usec: u64,
    /// degE7
    pub lat: i32,
    /// degE7
    pub lon: i32,
    /// mm, MSL
    pub alt: i32,
    pub eph: u16,
    pub epv: u16,
    /// ground speed, cm/s
    pub vel: u16,
    /// cm/s
    pub vn: i16,
    pub ve: i16,
    pub vd: i16,
    /// course over ground, cdeg
    pub cog: u16,
    pub fix_type: u8,
    pub satellites_visible: u8,
    pub id: u8,
    /// cdeg, 0 = unknown
    pub yaw: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HilActuatorControls {
    pub time_usec: u64,
    pub flags: u64,
    pub controls: [f32; 16],
    pub mode: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HilMessage {
    Heartbeat(Heartbeat),
    HilSensor(HilSensor),
    HilGps(HilGps),
    HilActuatorControls(HilActuatorControls),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i16(&mut self, v: i16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

/// Reads from a payload that has already been zero-padded to full length.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let mut out = [0u8; N];
        out.copy_from_slice(&self.buf[self.pos..self.pos + N]);
        self.pos += N;
        out
    }
    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }
    fn i16(&mut self) -> i16 {
        i16::from_le_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn i32(&mut self) -> i32 {
        i32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
}

impl HilMessage {
    pub fn id(&self) -> u32 {
        match self {
            HilMessage::Heartbeat(_) => HEARTBEAT_ID,
            HilMessage::HilSensor(_) => HIL_SENSOR_ID,
            HilMessage::HilGps(_) => HIL_GPS_ID,
            HilMessage::HilActuatorControls(_) => HIL_ACTUATOR_CONTROLS_ID,
        }
    }

    /// Full (untruncated) payload in wire order.
    pub fn payload(&self) -> Vec<u8> {
        let mut w = Writer(Vec::with_capacity(96));
        match self {
            HilMessage::Heartbeat(m) => {
                w.u32(m.custom_mode);
                w.u8(m.mav_type);
                w.u8(m.autopilot);
                w.u8(m.base_mode);
                w.u8(m.system_status);
                w.u8(m.mavlink_version);
            }
            HilMessage::HilSensor(m) => {
                w.u64(m.time_usec);
                for v in m.acc.iter().chain(&m.gyro).chain(&m.mag) {
                    w.f32(*v);
                }
                w.f32(m.abs_pressure);
                w.f32(m.diff_pressure);
                w.f32(m.pressure_alt);
                w.f32(m.temperature);
                w.u32(m.fields_updated);
                w.u8(m.id);
            }
            HilMessage::HilGps(m) => {
                w.u64(m.time_usec);
                w.i32(m.lat);
                w.i32(m.lon);
                w.i32(m.alt);
                w.u16(m.eph);
                w.u16(m.epv);
                w.u16(m.vel);
                w.i16(m.vn);
                w.i16(m.ve);
                w.i16(m.vd);
                w.u16(m.cog);
                w.u8(m.fix_type);
                w.u8(m.satellites_visible);
                w.u8(m.id);
                w.u16(m.yaw);
            }
            HilMessage::HilActuatorControls(m) => {
                w.u64(m.time_usec);
                w.u64(m.flags);
                for c in &m.controls {
                    w.f32(*c);
                }
                w.u8(m.mode);
            }
        }
        w.0
    }

    /// Parses a payload for `msgid`; short payloads are zero-extended, extra bytes ignored.
    /// Returns `None` for unsupported ids.
    pub fn from_payload(msgid: u32, payload: &[u8]) -> Option<HilMessage> {
        let def = defs::by_id(msgid)?;
        let mut buf = vec![0u8; def.max_len()];
        let n = payload.len().min(buf.len());
        buf[..n].copy_from_slice(&payload[..n]);
        let mut r = Reader { buf: &buf, pos: 0 };
        let msg = match msgid {
            HEARTBEAT_ID => HilMessage::Heartbeat(Heartbeat {
                custom_mode: r.u32(),
                mav_type: r.u8(),
                autopilot: r.u8(),
                base_mode: r.u8(),
                system_status: r.u8(),
                mavlink_version: r.u8(),
            }),
            HIL_SENSOR_ID => {
                let time_usec = r.u64();
                let mut v = [0f32; 9];
                for x in v.iter_mut() {
                    *x = r.f32();
                }
                HilMessage::HilSensor(HilSensor {
                    time_usec,
                    acc: [v[0], v[1], v[2]],
                    gyro: [v[3], v[4], v[5]],
                    mag: [v[6], v[7], v[8]],
                    abs_pressure: r.f32(),
                    diff_pressure: r.f32(),
                    pressure_alt: r.f32(),
                    temperature: r.f32(),
                    fields_updated: r.u32(),
                    id: r.u8(),
                })
            }
            HIL_GPS_ID => HilMessage::HilGps(HilGps {
                time_usec: r.u64(),
                lat: r.i32(),
                lon: r.i32(),
                alt: r.i32(),
                eph: r.u16(),
                epv: r.u16(),
                vel: r.u16(),
                vn: r.i16(),
                ve: r.i16(),
                vd: r.i16(),
                cog: r.u16(),
                fix_type: r.u8(),
                satellites_visible: r.u8(),
                id: r.u8(),
                yaw: r.u16(),
            }),
            HIL_ACTUATOR_CONTROLS_ID => {
                let time_usec = r.u64();
                let flags = r.u64();
                let mut controls = [0f32; 16];
                for c in controls.iter_mut() {
                    *c = r.f32();
                }
                HilMessage::HilActuatorControls(HilActuatorControls { time_usec, flags, controls, mode: r.u8() })
            }
            _ => return None,
        };
        Some(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_lengths_match_definitions() {
        let msgs = [
            HilMessage::Heartbeat(Heartbeat::default()),
            HilMessage::HilSensor(HilSensor::default()),
            HilMessage::HilGps(HilGps::default()),
            HilMessage::HilActuatorControls(HilActuatorControls::default()),
        ];
        for m in msgs {
            let def = defs::by_id(m.id()).unwrap();
            assert_eq!(m.payload().len(), def.max_len(), "{}", def.name);
        }
        assert_eq!(defs::HEARTBEAT.base_len(), 9);
        assert_eq!(defs::HIL_SENSOR.base_len(), 64);
        assert_eq!(defs::HIL_GPS.base_len(), 36);
        assert_eq!(defs::HIL_ACTUATOR_CONTROLS.base_len(), 81);
    }

    #[test]
    fn wire_order_offsets() {
        // HIL_GPS puts the single-byte fields last
        let order: Vec<&str> = defs::HIL_GPS.wire_order().iter().map(|f| f.name).collect();
        assert_eq!(
            order,
            ["time_usec", "lat", "lon", "alt", "eph", "epv", "vel", "vn", "ve", "vd", "cog", "fix_type", "satellites_visible", "id", "yaw"]
        );
        let gps = HilGps { fix_type: 3, satellites_visible: 10, lat: -2, ..Default::default() };
        let p = HilMessage::HilGps(gps).payload();
        assert_eq!(&p[8..12], &(-2i32).to_le_bytes());
        assert_eq!(p[34], 3);
        assert_eq!(p[35], 10);
    }

    #[test]
    fn short_payload_is_zero_extended() {
        let m = HilMessage::from_payload(HEARTBEAT_ID, &[7, 0, 0, 0, 2]).unwrap();
        assert_eq!(m, HilMessage::Heartbeat(Heartbeat { custom_mode: 7, mav_type: 2, ..Default::default() }));
        assert!(HilMessage::from_payload(12345, &[]).is_none());
    }
}
