//! Definitions of the supported messages, as declared in the common dialect.

use super::crc::{FieldDef as F, FieldType::*, MessageDef};

pub const HEARTBEAT_ID: u32 = 0;
pub const HIL_ACTUATOR_CONTROLS_ID: u32 = 93;
pub const HIL_SENSOR_ID: u32 = 107;
pub const HIL_GPS_ID: u32 = 113;

pub const HEARTBEAT: MessageDef = MessageDef {
    name: "HEARTBEAT",
    id: HEARTBEAT_ID,
    fields: &[
        F::new("type", U8),
        F::new("autopilot", U8),
        F::new("base_mode", U8),
        F::new("custom_mode", U32),
        F::new("system_status", U8),
        F::new("mavlink_version", U8),
    ],
};

pub const HIL_ACTUATOR_CONTROLS: MessageDef = MessageDef {
    name: "HIL_ACTUATOR_CONTROLS",
    id: HIL_ACTUATOR_CONTROLS_ID,
    fields: &[
        F::new("time_usec", U64),
        F::array("controls", F32, 16),
        F::new("mode", U8),
        F::new("flags", U64),
    ],
};

pub const HIL_SENSOR: MessageDef = MessageDef {
    name: "HIL_SENSOR",
    id: HIL_SENSOR_ID,
    fields: &[
        F::new("time_usec", U64),
        F::new("xacc", F32),
        F::new("yacc", F32),
        F::new("zacc", F32),
        F::new("xgyro", F32),
        F::new("ygyro", F32),
        F::new("zgyro", F32),
        F::new("xmag", F32),
        F::new("ymag", F32),
        F::new("zmag", F32),
        F::new("abs_pressure", F32),
        F::new("diff_pressure", F32),
        F::new("pressure_alt", F32),
        F::new("temperature", F32),
        F::new("fields_updated", U32),
        F::ext("id", U8),
    ],
};

pub const HIL_GPS: MessageDef = MessageDef {
    name: "HIL_GPS",
    id: HIL_GPS_ID,
    fields: &[
        F::new("time_usec", U64),
        F::new("fix_type", U8),
        F::new("lat", I32),
        F::new("lon", I32),
        F::new("alt", I32),
        F::new("eph", U16),
        F::new("epv", U16),
        F::new("vel", U16),
        F::new("vn", I16),
        F::new("ve", I16),
        F::new("vd", I16),
        F::new("cog", U16),
        F::new("satellites_visible", U8),
        F::ext("id", U8),
        F::ext("yaw", U16),
    ],
};

pub const ALL: [&MessageDef; 4] = [&HEARTBEAT, &HIL_ACTUATOR_CONTROLS, &HIL_SENSOR, &HIL_GPS];

pub fn by_id(id: u32) -> Option<&'static MessageDef> {
    ALL.into_iter().find(|d| d.id == id)
}
