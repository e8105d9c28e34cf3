//! HIL session: exchanges sensor batches for actuator outputs with an external autopilot.
//!
//! The simulator listens; the autopilot connects and speaks first. In lockstep
//! mode every HIL_SENSOR sent must be answered by one HIL_ACTUATOR_CONTROLS
//! before physics may advance. Without lockstep a reader thread decodes
//! inbound frames into a queue and the stepper uses the latest controls.

use std::collections::VecDeque;
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::control::{BackendError, ControlBackend};
use crate::dynamics::{MultirotorParams, RigidBodyState, RotorCommand};
use crate::sensors::{
    barometer_sample, imu_sample, magnetometer_sample, stream_rng, BaroNoise, BaroReading, GeoOrigin, GpsReading,
    ImuNoise, ImuReading, LatestReadings, MagConfig, MagReading, SensorReading,
};
use crate::frames::Vec3;

use super::frame::{decode_datagram, encode_frame, MavlinkFrame};
use super::hil::{build_hil_gps, build_hil_sensor, controls_to_speeds};
use super::messages::{Heartbeat, HilActuatorControls, HilMessage};

const MAX_DATAGRAM: usize = 2048;
const DEDUP_WINDOW: usize = 64;
const READER_POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("socket: {0}")]
    Io(#[from] io::Error),
    #[error("no actuator controls within {0:?}")]
    Timeout(Duration),
    #[error("no autopilot connected within {0:?}")]
    HandshakeTimeout(Duration),
    #[error("session is not running")]
    NotRunning,
    #[error("peer disconnected")]
    Disconnected,
}

/// Datagram transport.
pub trait Transport: Send {
    fn send(&mut self, bytes: &[u8]) -> io::Result<()>;

    /// Next datagram, or `None` if nothing arrived within `timeout`.
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>>;

    /// Receive-only handle usable from another thread.
    fn reader(&self) -> io::Result<Box<dyn DatagramReader>>;
}

pub trait DatagramReader: Send {
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>>;
}

/// Parses `udp:HOST:PORT` (the `udp:` prefix is optional).
pub fn parse_udp_endpoint(spec: &str) -> io::Result<SocketAddr> {
    let addr = spec.strip_prefix("udp:").unwrap_or(spec);
    if spec.contains("://") || addr.starts_with("tcp:") {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, format!("unsupported endpoint '{spec}', expected udp:HOST:PORT")));
    }
    addr.to_socket_addrs()?
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, format!("'{spec}' resolves to no address")))
}

/// UDP endpoint. Without a fixed remote, replies go to the sender of the most recent datagram.
pub struct UdpTransport {
    socket: UdpSocket,
    remote: Arc<Mutex<Option<SocketAddr>>>,
}

impl UdpTransport {
    pub fn bind(local: impl ToSocketAddrs) -> io::Result<Self> {
        Ok(Self { socket: UdpSocket::bind(local)?, remote: Arc::new(Mutex::new(None)) })
    }

    pub fn with_remote(local: impl ToSocketAddrs, remote: SocketAddr) -> io::Result<Self> {
        Ok(Self { socket: UdpSocket::bind(local)?, remote: Arc::new(Mutex::new(Some(remote))) })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    pub fn remote(&self) -> Option<SocketAddr> {
        *self.remote.lock().unwrap()
    }
}

fn udp_recv(socket: &UdpSocket, remote: &Mutex<Option<SocketAddr>>, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
    socket.set_read_timeout(Some(timeout.max(Duration::from_micros(1))))?;
    let mut buf = [0u8; MAX_DATAGRAM];
    match socket.recv_from(&mut buf) {
        Ok((n, from)) => {
            *remote.lock().unwrap() = Some(from);
            Ok(Some(buf[..n].to_vec()))
        }
        Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => Ok(None),
        Err(e) => Err(e),
    }
}

impl Transport for UdpTransport {
    fn send(&mut self, bytes: &[u8]) -> io::Result<()> {
        match self.remote() {
            Some(addr) => self.socket.send_to(bytes, addr).map(|_| ()),
            None => Err(io::Error::new(io::ErrorKind::NotConnected, "remote endpoint unknown")),
        }
    }

    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        udp_recv(&self.socket, &self.remote, timeout)
    }

    fn reader(&self) -> io::Result<Box<dyn DatagramReader>> {
        Ok(Box::new(UdpReader { socket: self.socket.try_clone()?, remote: Arc::clone(&self.remote) }))
    }
}

struct UdpReader {
    socket: UdpSocket,
    remote: Arc<Mutex<Option<SocketAddr>>>,
}

impl DatagramReader for UdpReader {
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        udp_recv(&self.socket, &self.remote, timeout)
    }
}

/// In-process datagram link, one end of a [`memory_pair`].
pub struct MemoryTransport {
    tx: Sender<Vec<u8>>,
    rx: Arc<Mutex<Receiver<Vec<u8>>>>,
}

/// Two connected in-memory endpoints.
pub fn memory_pair() -> (MemoryTransport, MemoryTransport) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    (
        MemoryTransport { tx: a_tx, rx: Arc::new(Mutex::new(a_rx)) },
        MemoryTransport { tx: b_tx, rx: Arc::new(Mutex::new(b_rx)) },
    )
}

fn channel_recv(rx: &Mutex<Receiver<Vec<u8>>>, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
    match rx.lock().unwrap().recv_timeout(timeout) {
        Ok(d) => Ok(Some(d)),
        Err(RecvTimeoutError::Timeout) => Ok(None),
        Err(RecvTimeoutError::Disconnected) => Err(io::Error::new(io::ErrorKind::BrokenPipe, "peer dropped")),
    }
}

impl Transport for MemoryTransport {
    fn send(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.tx
            .send(bytes.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer dropped"))
    }

    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        channel_recv(&self.rx, timeout)
    }

    fn reader(&self) -> io::Result<Box<dyn DatagramReader>> {
        Ok(Box::new(MemoryReader(Arc::clone(&self.rx))))
    }
}

struct MemoryReader(Arc<Mutex<Receiver<Vec<u8>>>>);

impl DatagramReader for MemoryReader {
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        channel_recv(&self.0, timeout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilConfig {
    pub lockstep: bool,
    /// Maximum wait for actuator controls in lockstep.
    pub timeout: Duration,
    pub handshake_timeout: Duration,
    pub sysid: u8,
    pub compid: u8,
    /// Heartbeat period in simulated seconds.
    pub heartbeat_period: f64,
}

impl Default for HilConfig {
    fn default() -> Self {
        Self {
            lockstep: true,
            timeout: Duration::from_secs(1),
            handshake_timeout: Duration::from_secs(30),
            sysid: 1,
            compid: 1,
            heartbeat_period: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    WaitingHandshake,
    Running,
    Closed,
}

/// Readings to forward for one physics step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorBatch {
    pub time: f64,
    pub baro: BaroReading,
    pub imu: ImuReading,
    pub mag: MagReading,
    /// Present only when a new fix is due.
    pub gps: Option<GpsReading>,
}

/// Recently seen (sysid, compid, seq, checksum) keys.
#[derive(Debug, Default)]
struct Dedup {
    seen: VecDeque<(u8, u8, u8, u16)>,
}

impl Dedup {
    /// True if the frame is new.
    fn admit(&mut self, f: &MavlinkFrame) -> bool {
        let key = (f.header.sysid, f.header.compid, f.header.seq, f.checksum);
        if self.seen.contains(&key) {
            return false;
        }
        if self.seen.len() == DEDUP_WINDOW {
            self.seen.pop_front();
        }
        self.seen.push_back(key);
        true
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct SessionStats {
    pub sent: u64,
    pub actuator_received: u64,
    pub duplicates: u64,
    pub malformed: u64,
}

struct ReaderThread {
    frames: Receiver<MavlinkFrame>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl Drop for ReaderThread {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub struct HilSession {
    transport: Box<dyn Transport>,
    config: HilConfig,
    state: SessionState,
    seq: u8,
    sim_time: f64,
    last_heartbeat: Option<f64>,
    dedup: Dedup,
    stats: SessionStats,
    latest_controls: Option<HilActuatorControls>,
    reader: Option<ReaderThread>,
}

impl HilSession {
    pub fn new(transport: Box<dyn Transport>, config: HilConfig) -> Self {
        Self {
            transport,
            config,
            state: SessionState::WaitingHandshake,
            seq: 0,
            sim_time: 0.0,
            last_heartbeat: None,
            dedup: Dedup::default(),
            stats: SessionStats::default(),
            latest_controls: None,
            reader: None,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn config(&self) -> &HilConfig {
        &self.config
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn latest_controls(&self) -> Option<&HilActuatorControls> {
        self.latest_controls.as_ref()
    }

    /// Waits for the first valid frame from the autopilot, answers with a heartbeat
    /// and enters `Running`.
    pub fn handshake(&mut self) -> Result<(), SessionError> {
        match self.state {
            SessionState::Running => return Ok(()),
            SessionState::Closed => return Err(SessionError::NotRunning),
            SessionState::WaitingHandshake => {}
        }
        let deadline = Instant::now() + self.config.handshake_timeout;
        loop {
            let now = Instant::now();
            if now >= deadline {
                return Err(SessionError::HandshakeTimeout(self.config.handshake_timeout));
            }
            let Some(data) = self.transport.recv(deadline - now)? else { continue };
            let frames = self.accept(&data);
            if !frames.is_empty() {
                for f in frames {
                    self.absorb(f);
                }
                break;
            }
        }
        self.state = SessionState::Running;
        log::info!("autopilot connected");
        self.send(&HilMessage::Heartbeat(Heartbeat::simulator()))?;
        self.last_heartbeat = Some(self.sim_time);
        if !self.config.lockstep {
            self.spawn_reader()?;
        }
        Ok(())
    }

    fn spawn_reader(&mut self) -> Result<(), SessionError> {
        let mut source = self.transport.reader()?;
        let (tx, rx) = mpsc::channel();
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = Arc::clone(&stop);
        let handle = thread::spawn(move || {
            while !stop_flag.load(Ordering::Relaxed) {
                match source.recv(READER_POLL) {
                    Ok(Some(data)) => {
                        let (frames, errors) = decode_datagram(&data);
                        for e in errors {
                            log::warn!("dropping malformed frame: {e}");
                        }
                        for f in frames {
                            if tx.send(f).is_err() {
                                return;
                            }
                        }
                    }
                    Ok(None) => {}
                    Err(e) => {
                        log::error!("reader stopped: {e}");
                        return;
                    }
                }
            }
        });
        self.reader = Some(ReaderThread { frames: rx, stop, handle: Some(handle) });
        Ok(())
    }

    fn send(&mut self, msg: &HilMessage) -> Result<(), SessionError> {
        let bytes = encode_frame(msg, self.seq, self.config.sysid, self.config.compid);
        self.seq = self.seq.wrapping_add(1);
        self.transport.send(&bytes)?;
        self.stats.sent += 1;
        Ok(())
    }

    /// Decodes a datagram, logging and dropping malformed or duplicate frames.
    fn accept(&mut self, data: &[u8]) -> Vec<MavlinkFrame> {
        let (frames, errors) = decode_datagram(data);
        for e in errors {
            self.stats.malformed += 1;
            log::warn!("dropping malformed frame: {e}");
        }
        frames.into_iter().filter(|f| self.admit(f)).collect()
    }

    fn admit(&mut self, f: &MavlinkFrame) -> bool {
        if self.dedup.admit(f) {
            true
        } else {
            self.stats.duplicates += 1;
            log::debug!("dropping duplicate frame seq {}", f.header.seq);
            false
        }
    }

    /// Returns true for actuator controls.
    fn absorb(&mut self, f: MavlinkFrame) -> bool {
        match f.message {
            HilMessage::HilActuatorControls(c) => {
                self.stats.actuator_received += 1;
                self.latest_controls = Some(c);
                true
            }
            _ => false,
        }
    }

    fn send_batch(&mut self, batch: &SensorBatch) -> Result<(), SessionError> {
        self.sim_time = batch.time;
        let heartbeat_due = self
            .last_heartbeat
            .is_none_or(|t| batch.time - t >= self.config.heartbeat_period - 1e-9);
        if heartbeat_due {
            self.send(&HilMessage::Heartbeat(Heartbeat::simulator()))?;
            self.last_heartbeat = Some(batch.time);
        }
        self.send(&build_hil_sensor(&batch.baro, &batch.imu, &batch.mag))?;
        if let Some(gps) = &batch.gps {
            self.send(&build_hil_gps(gps))?;
        }
        Ok(())
    }

    fn wait_for_controls(&mut self) -> Result<HilActuatorControls, SessionError> {
        let deadline = Instant::now() + self.config.timeout;
        loop {
            let now = Instant::now();
            if now >= deadline {
                log::error!("lockstep timeout at t = {:.3} s", self.sim_time);
                return Err(SessionError::Timeout(self.config.timeout));
            }
            let data = match self.transport.recv(deadline - now) {
                Ok(Some(d)) => d,
                Ok(None) => continue,
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => return Err(SessionError::Disconnected),
                Err(e) => return Err(e.into()),
            };
            let mut got = None;
            for f in self.accept(&data) {
                if self.absorb(f) {
                    got = self.latest_controls;
                }
            }
            if let Some(c) = got {
                return Ok(c);
            }
        }
    }

    fn drain_reader(&mut self) {
        let Some(reader) = self.reader.take() else { return };
        while let Ok(f) = reader.frames.try_recv() {
            if self.admit(&f) {
                self.absorb(f);
            }
        }
        self.reader = Some(reader);
    }

    pub fn close(&mut self) {
        self.reader = None;
        self.state = SessionState::Closed;
    }
}

impl Drop for HilSession {
    fn drop(&mut self) {
        self.close();
    }
}

/// Sends one step's sensor batch and returns the controls to apply for the next step.
///
/// In lockstep this blocks until actuator controls arrive or the timeout fires.
/// Otherwise it returns the most recent controls received so far, if any.
pub fn hil_session_step(session: &mut HilSession, batch: &SensorBatch) -> Result<Option<[f32; 16]>, SessionError> {
    if session.state != SessionState::Running {
        return Err(SessionError::NotRunning);
    }
    session.send_batch(batch)?;
    if session.config.lockstep {
        session.wait_for_controls().map(|c| Some(c.controls))
    } else {
        session.drain_reader();
        Ok(session.latest_controls.map(|c| c.controls))
    }
}

/// Behaviour of the loopback autopilot double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoConfig {
    pub controls: [f32; 16],
    /// Send every reply twice.
    pub duplicate: bool,
    /// Stop replying after this many HIL_SENSOR messages.
    pub reply_limit: Option<u64>,
}

impl Default for EchoConfig {
    fn default() -> Self {
        Self { controls: [0.5; 16], duplicate: false, reply_limit: None }
    }
}

/// Runs a minimal autopilot stand-in: announces itself with a heartbeat and answers
/// every HIL_SENSOR with fixed actuator controls. Exits when the link drops or
/// after `idle` without traffic; returns the number of HIL_SENSOR frames seen.
pub fn spawn_echo_autopilot(mut transport: impl Transport + 'static, config: EchoConfig, idle: Duration) -> JoinHandle<u64> {
    thread::spawn(move || {
        let mut seq = 0u8;
        let mut send = |t: &mut dyn Transport, msg: &HilMessage| {
            let bytes = encode_frame(msg, seq, 1, 1);
            seq = seq.wrapping_add(1);
            t.send(&bytes).is_ok()
        };
        let hb = HilMessage::Heartbeat(Heartbeat { mav_type: 2, autopilot: 12, ..Heartbeat::simulator() });
        if !send(&mut transport, &hb) {
            return 0;
        }
        let mut sensors = 0u64;
        while let Ok(Some(data)) = transport.recv(idle) {
            let (frames, _) = decode_datagram(&data);
            for f in frames {
                let HilMessage::HilSensor(s) = f.message else { continue };
                sensors += 1;
                if config.reply_limit.is_some_and(|n| sensors > n) {
                    continue;
                }
                let reply = HilMessage::HilActuatorControls(HilActuatorControls {
                    time_usec: s.time_usec,
                    flags: 0,
                    controls: config.controls,
                    mode: 0x80,
                });
                let bytes = encode_frame(&reply, seq, 1, 1);
                seq = seq.wrapping_add(1);
                let n = if config.duplicate { 2 } else { 1 };
                for _ in 0..n {
                    if transport.send(&bytes).is_err() {
                        return sensors;
                    }
                }
            }
        }
        sensors
    })
}

/// Control backend that forwards sensors to an external autopilot and applies its actuator outputs.
pub struct MavlinkBackend {
    session: HilSession,
    rotor_count: usize,
    max_rotor_speed: f64,
    origin: GeoOrigin,
    gravity: f64,
    state: RigidBodyState,
    latest: LatestReadings,
    gps_pending: Option<GpsReading>,
    last_controls: Option<[f32; 16]>,
}

impl MavlinkBackend {
    pub fn new(session: HilSession, params: &MultirotorParams, origin: GeoOrigin) -> Self {
        Self {
            session,
            rotor_count: params.rotor_count(),
            max_rotor_speed: params.max_rotor_speed,
            origin,
            gravity: params.gravity,
            state: RigidBodyState::default(),
            latest: LatestReadings::default(),
            gps_pending: None,
            last_controls: None,
        }
    }

    pub fn session(&self) -> &HilSession {
        &self.session
    }

    /// Noise-free readings derived from the current state, assuming zero inertial
    /// acceleration. Used before the first sensor samples exist.
    fn truth_readings(&self) -> Result<(BaroReading, ImuReading, MagReading), BackendError> {
        let mut rng = stream_rng(0, 0);
        let s = &self.state;
        let baro = barometer_sample(s, &self.origin, &mut BaroNoise::noiseless(), 1.0, &mut rng)
            .map_err(|e| BackendError::with_source("mavlink", e))?;
        let imu = imu_sample(s, Vec3::ZERO, self.gravity, &mut ImuNoise::noiseless(), 1.0, &mut rng);
        let mut mag_cfg = MagConfig::default();
        mag_cfg.noise = Default::default();
        let mag = magnetometer_sample(s, &self.origin, &mut mag_cfg, 1.0, &mut rng);
        Ok((baro, imu, mag))
    }

    fn batch(&mut self) -> Result<SensorBatch, BackendError> {
        let (baro, imu, mag) = match (self.latest.baro, self.latest.imu, self.latest.mag) {
            (Some(b), Some(i), Some(m)) => (b, i, m),
            _ => self.truth_readings()?,
        };
        Ok(SensorBatch { time: self.state.time, baro, imu, mag, gps: self.gps_pending.take() })
    }
}

impl ControlBackend for MavlinkBackend {
    fn name(&self) -> &str {
        "mavlink"
    }

    fn start(&mut self) -> Result<(), BackendError> {
        self.session.handshake().map_err(|e| BackendError::with_source("mavlink", e))
    }

    fn stop(&mut self) {
        self.session.close();
    }

    fn receive_state(&mut self, state: &RigidBodyState) {
        self.state = *state;
    }

    fn receive_sensor(&mut self, reading: &SensorReading) {
        self.latest.update(reading);
        if let SensorReading::Gps(g) = reading {
            self.gps_pending = Some(*g);
        }
    }

    fn rotor_command(&mut self) -> Result<RotorCommand, BackendError> {
        let batch = self.batch()?;
        let controls = hil_session_step(&mut self.session, &batch).map_err(|e| BackendError::with_source("mavlink", e))?;
        if controls.is_some() {
            self.last_controls = controls;
        }
        let speeds = match self.last_controls {
            Some(c) => controls_to_speeds(&c, self.rotor_count, self.max_rotor_speed),
            None => vec![0.0; self.rotor_count],
        };
        Ok(RotorCommand::new(speeds))
    }
}
