//! MAVLink v2 framing.
//!
//! ```text
//! 0xFD | len | incompat | compat | seq | sysid | compid | msgid (3, LE) | payload | crc (2, LE)
//! ```
//! The checksum covers everything after the magic byte plus the message's CRC_EXTRA.

use thiserror::Error;

use super::crc::{crc_accumulate, crc_accumulate_slice, crc_extra};
use super::defs;
use super::messages::HilMessage;

pub const MAGIC_V2: u8 = 0xfd;
pub const HEADER_LEN: usize = 10;
pub const CHECKSUM_LEN: usize = 2;
pub const MAX_FRAME_LEN: usize = HEADER_LEN + 255 + CHECKSUM_LEN;
const INCOMPAT_SIGNED: u8 = 0x01;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bad magic byte 0x{0:02x}")]
    BadMagic(u8),
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("checksum mismatch: computed 0x{computed:04x}, frame has 0x{received:04x}")]
    CrcMismatch { computed: u16, received: u16 },
    #[error("unknown message id {0}")]
    UnknownMessage(u32),
    #[error("unsupported incompatibility flags 0x{0:02x}")]
    UnsupportedFlags(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub payload_len: u8,
    pub incompat_flags: u8,
    pub compat_flags: u8,
    pub seq: u8,
    pub sysid: u8,
    pub compid: u8,
    pub msgid: u32,
}

/// A validated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MavlinkFrame {
    pub header: FrameHeader,
    /// Payload as transmitted (possibly truncated).
    pub payload: Vec<u8>,
    pub checksum: u16,
    pub message: HilMessage,
}

impl MavlinkFrame {
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload.len() + CHECKSUM_LEN
    }
}

fn frame_crc(after_magic: &[u8], extra: u8) -> u16 {
    crc_accumulate(extra, crc_accumulate_slice(after_magic, 0xffff))
}

/// Serializes `msg` as an unsigned v2 frame with trailing zero bytes of the payload removed.
pub fn encode_frame(msg: &HilMessage, seq: u8, sysid: u8, compid: u8) -> Vec<u8> {
    let mut payload = msg.payload();
    // v2 truncation keeps at least one byte
    while payload.len() > 1 && payload.last() == Some(&0) {
        payload.pop();
    }
    let id = msg.id();
    let extra = crc_extra(defs::by_id(id).expect("every HilMessage has a definition"));
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + CHECKSUM_LEN);
    out.extend_from_slice(&[MAGIC_V2, payload.len() as u8, 0, 0, seq, sysid, compid]);
    out.extend_from_slice(&id.to_le_bytes()[..3]);
    out.extend_from_slice(&payload);
    let crc = frame_crc(&out[1..], extra);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Decodes one frame from the start of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<MavlinkFrame, DecodeError> {
    let first = *bytes.first().ok_or(DecodeError::Truncated { needed: HEADER_LEN, available: 0 })?;
    if first != MAGIC_V2 {
        return Err(DecodeError::BadMagic(first));
    }
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated { needed: HEADER_LEN, available: bytes.len() });
    }
    let header = FrameHeader {
        payload_len: bytes[1],
        incompat_flags: bytes[2],
        compat_flags: bytes[3],
        seq: bytes[4],
        sysid: bytes[5],
        compid: bytes[6],
        msgid: u32::from_le_bytes([bytes[7], bytes[8], bytes[9], 0]),
    };
    let signed = header.incompat_flags & INCOMPAT_SIGNED != 0;
    let needed = HEADER_LEN + header.payload_len as usize + CHECKSUM_LEN + if signed { 13 } else { 0 };
    if bytes.len() < needed {
        return Err(DecodeError::Truncated { needed, available: bytes.len() });
    }
    if header.incompat_flags != 0 {
        return Err(DecodeError::UnsupportedFlags(header.incompat_flags));
    }
    let def = defs::by_id(header.msgid).ok_or(DecodeError::UnknownMessage(header.msgid))?;
    let payload_end = HEADER_LEN + header.payload_len as usize;
    let received = u16::from_le_bytes([bytes[payload_end], bytes[payload_end + 1]]);
    let computed = frame_crc(&bytes[1..payload_end], crc_extra(def));
    if computed != received {
        return Err(DecodeError::CrcMismatch { computed, received });
    }
    let payload = bytes[HEADER_LEN..payload_end].to_vec();
    let message = HilMessage::from_payload(header.msgid, &payload).ok_or(DecodeError::UnknownMessage(header.msgid))?;
    Ok(MavlinkFrame { header, payload, checksum: received, message })
}

/// Incremental decoder for a byte stream that may contain garbage between frames.
#[derive(Debug, Default)]
pub struct FrameParser {
    buf: Vec<u8>,
}

impl FrameParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next complete frame or error; `None` when more bytes are needed.
    ///
    /// Errors other than truncation consume the offending magic byte so the
    /// parser resynchronises on the next call.
    pub fn next_frame(&mut self) -> Option<Result<MavlinkFrame, DecodeError>> {
        let start = self.buf.iter().position(|&b| b == MAGIC_V2);
        match start {
            None => {
                self.buf.clear();
                return None;
            }
            Some(0) => {}
            Some(n) => {
                self.buf.drain(..n);
            }
        }
        match decode_frame(&self.buf) {
            Ok(frame) => {
                let n = frame.wire_len();
                self.buf.drain(..n);
                Some(Ok(frame))
            }
            Err(DecodeError::Truncated { .. }) => None,
            Err(DecodeError::UnknownMessage(id)) => {
                // well-formed frame of a message we do not handle: skip it whole
                let n = (HEADER_LEN + self.buf[1] as usize + CHECKSUM_LEN).min(self.buf.len());
                self.buf.drain(..n);
                Some(Err(DecodeError::UnknownMessage(id)))
            }
            Err(e) => {
                self.buf.drain(..1);
                Some(Err(e))
            }
        }
    }
}

/// Decodes every frame in a datagram, returning frames and per-frame errors separately.
pub fn decode_datagram(bytes: &[u8]) -> (Vec<MavlinkFrame>, Vec<DecodeError>) {
    let mut parser = FrameParser::new();
    parser.push(bytes);
    let mut frames = Vec::new();
    let mut errors = Vec::new();
    while let Some(r) = parser.next_frame() {
        match r {
            Ok(f) => frames.push(f),
            Err(e) => errors.push(e),
        }
    }
    if parser.buffered() > 0 {
        errors.push(DecodeError::Truncated { needed: HEADER_LEN, available: parser.buffered() });
    }
    (frames, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mavlink::messages::{Heartbeat, HilActuatorControls, HilSensor};

    fn sample_sensor() -> HilMessage {
        HilMessage::HilSensor(HilSensor {
            time_usec: 123_456_789,
            acc: [0.1, -0.2, -9.81],
            gyro: [0.01, 0.02, -0.03],
            mag: [0.21, 0.01, 0.43],
            abs_pressure: 1013.25,
            diff_pressure: 0.0,
            pressure_alt: 12.5,
            temperature: 15.0,
            fields_updated: 0x1fff,
            id: 0,
        })
    }

    #[test]
    fn round_trip() {
        let m = sample_sensor();
        let bytes = encode_frame(&m, 7, 1, 200);
        let f = decode_frame(&bytes).unwrap();
        assert_eq!(f.message, m);
        assert_eq!((f.header.seq, f.header.sysid, f.header.compid), (7, 1, 200));
        assert_eq!(f.wire_len(), bytes.len());
    }

    #[test]
    fn truncates_trailing_zeros() {
        // id extension and the high bytes of fields_updated are zero
        let bytes = encode_frame(&sample_sensor(), 0, 1, 1);
        assert_eq!(bytes[1] as usize, 62);
        let zero = HilMessage::HilActuatorControls(HilActuatorControls::default());
        let bytes = encode_frame(&zero, 0, 1, 1);
        assert_eq!(bytes[1], 1);
        assert_eq!(decode_frame(&bytes).unwrap().message, zero);
    }

    #[test]
    fn distinct_errors() {
        let good = encode_frame(&HilMessage::Heartbeat(Heartbeat::simulator()), 1, 1, 1);
        let mut bad = good.clone();
        bad[0] = 0xfe;
        assert_eq!(decode_frame(&bad), Err(DecodeError::BadMagic(0xfe)));
        assert!(matches!(decode_frame(&good[..good.len() - 1]), Err(DecodeError::Truncated { .. })));
        assert!(matches!(decode_frame(&good[..4]), Err(DecodeError::Truncated { .. })));
        let mut flipped = good.clone();
        flipped[HEADER_LEN] ^= 0x10;
        assert!(matches!(decode_frame(&flipped), Err(DecodeError::CrcMismatch { .. })));
        let mut unknown = good.clone();
        unknown[7] = 0x55;
        assert_eq!(decode_frame(&unknown), Err(DecodeError::UnknownMessage(0x55)));
        let mut signed = good;
        signed[2] = 0x01;
        signed.extend_from_slice(&[0; 13]);
        assert_eq!(decode_frame(&signed), Err(DecodeError::UnsupportedFlags(1)));
    }

    #[test]
    fn parser_resyncs_over_garbage() {
        let a = encode_frame(&sample_sensor(), 1, 1, 1);
        let b = encode_frame(&HilMessage::Heartbeat(Heartbeat::simulator()), 2, 1, 1);
        let mut corrupt = a.clone();
        corrupt[12] ^= 0xff;
        let mut stream = vec![0x00, 0x13, 0x42];
        stream.extend_from_slice(&corrupt);
        stream.extend_from_slice(&a);
        stream.extend_from_slice(&b);
        let mut parser = FrameParser::new();
        let mut ok = Vec::new();
        // feed in small chunks
        for chunk in stream.chunks(5) {
            parser.push(chunk);
            while let Some(r) = parser.next_frame() {
                if let Ok(f) = r {
                    ok.push(f.header.seq);
                }
            }
        }
        assert_eq!(ok, vec![1, 2]);
    }

    #[test]
    fn datagram_with_two_frames() {
        let mut d = encode_frame(&sample_sensor(), 1, 1, 1);
        d.extend(encode_frame(&HilMessage::Heartbeat(Heartbeat::simulator()), 2, 1, 1));
        let (frames, errors) = decode_datagram(&d);
        assert_eq!(frames.len(), 2);
        assert!(errors.is_empty());
    }
}
