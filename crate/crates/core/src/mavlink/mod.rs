//! MAVLink v2 codec for the HIL message set and the UDP bridge to an external autopilot.

pub mod crc;
pub mod defs;
pub mod frame;
pub mod hil;
pub mod messages;
pub mod session;

pub use crc::{crc16_mcrf4xx, crc_extra};
pub use frame::{decode_datagram, decode_frame, encode_frame, DecodeError, FrameHeader, FrameParser, MavlinkFrame};
pub use hil::{build_hil_gps, build_hil_sensor, controls_to_speeds};
pub use messages::{Heartbeat, HilActuatorControls, HilGps, HilMessage, HilSensor};
pub use session::{
    hil_session_step, memory_pair, parse_udp_endpoint, spawn_echo_autopilot, EchoConfig, HilConfig, HilSession, MavlinkBackend,
    MemoryTransport, SensorBatch, SessionError, SessionState, Transport, UdpTransport,
};
