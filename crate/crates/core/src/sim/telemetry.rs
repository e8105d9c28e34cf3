//! Per-vehicle CSV telemetry.
//!
//! One row per recorded physics step. Floats are written with 17 significant
//! digits so a replay can be compared bit for bit; values that do not exist yet
//! (no reference, sensor not sampled) are written as `NaN`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::control::FlatReference;
use crate::dynamics::RigidBodyState;
use crate::frames::Vec3;
use crate::sensors::LatestReadings;

/// Snapshot of one vehicle at the start of a physics step, with the command applied over it.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub step: u64,
    pub state: RigidBodyState,
    pub reference: Option<FlatReference>,
    pub rotor_speeds: Vec<f64>,
    pub latest: LatestReadings,
}

impl TelemetryRecord {
    pub fn time(&self) -> f64 {
        self.state.time
    }

    /// Euclidean position tracking error, if a reference exists.
    pub fn position_error(&self) -> Option<f64> {
        self.reference.map(|r| (self.state.position - r.position).norm())
    }
}

const STATE_COLUMNS: [&str; 14] = [
    "t", "px", "py", "pz", "vx", "vy", "vz", "qx", "qy", "qz", "qw", "wx", "wy", "wz",
];
const REFERENCE_COLUMNS: [&str; 4] = ["ref_x", "ref_y", "ref_z", "err"];
const SENSOR_COLUMNS: [&str; 15] = [
    "baro_pressure",
    "baro_temperature",
    "baro_pressure_alt",
    "mag_x",
    "mag_y",
    "mag_z",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "acc_x",
    "acc_y",
    "acc_z",
    "gps_lat",
    "gps_lon",
    "gps_alt",
];

/// Column names for a vehicle with `rotors` rotors.
pub fn csv_header(rotors: usize) -> Vec<String> {
    let mut cols: Vec<String> = STATE_COLUMNS.iter().chain(&REFERENCE_COLUMNS).map(|s| s.to_string()).collect();
    cols.extend((0..rotors).map(|i| format!("rotor_{i}")));
    cols.extend(SENSOR_COLUMNS.iter().map(|s| s.to_string()));
    cols
}

fn push(line: &mut String, x: f64) {
    if !line.is_empty() {
        line.push(',');
    }
    let _ = write!(line, "{x:.16e}");
}

fn push3(line: &mut String, v: Option<Vec3>) {
    let v = v.unwrap_or(Vec3::splat(f64::NAN));
    push(line, v.x);
    push(line, v.y);
    push(line, v.z);
}

pub fn format_row(r: &TelemetryRecord) -> String {
    let mut line = String::with_capacity(1024);
    let s = &r.state;
    push(&mut line, s.time);
    push3(&mut line, Some(s.position));
    push3(&mut line, Some(s.velocity));
    for c in s.attitude.to_xyzw() {
        push(&mut line, c);
    }
    push3(&mut line, Some(s.angular_velocity));
    push3(&mut line, r.reference.map(|f| f.position));
    push(&mut line, r.position_error().unwrap_or(f64::NAN));
    for &w in &r.rotor_speeds {
        push(&mut line, w);
    }
    let l = &r.latest;
    let nan = f64::NAN;
    let (p, t, pa) = l.baro.map_or((nan, nan, nan), |b| (b.pressure, b.temperature, b.pressure_altitude));
    push(&mut line, p);
    push(&mut line, t);
    push(&mut line, pa);
    push3(&mut line, l.mag.map(|m| m.field));
    push3(&mut line, l.imu.map(|i| i.gyro));
    push3(&mut line, l.imu.map(|i| i.accel));
    let (lat, lon, alt) = l.gps.map_or((nan, nan, nan), |g| (g.latitude, g.longitude, g.altitude));
    push(&mut line, lat);
    push(&mut line, lon);
    push(&mut line, alt);
    line
}

/// Buffered CSV writer owned by a single vehicle.
pub struct TelemetryWriter {
    out: BufWriter<File>,
    path: PathBuf,
    decimation: u64,
    rows: u64,
}

impl TelemetryWriter {
    pub fn create(path: &Path, rotors: usize, decimation: u32) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", csv_header(rotors).join(","))?;
        Ok(Self { out, path: path.to_path_buf(), decimation: decimation.max(1) as u64, rows: 0 })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Rows written so far (header excluded).
    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn record(&mut self, r: &TelemetryRecord) -> io::Result<()> {
        if r.step.is_multiple_of(self.decimation) {
            writeln!(self.out, "{}", format_row(r))?;
            self.rows += 1;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// A telemetry CSV loaded back into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Telemetry {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Telemetry {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_telemetry(path: &Path) -> io::Result<Telemetry> {
    let text = std::fs::read_to_string(path)?;
    parse_telemetry(&text)
}

pub fn parse_telemetry(text: &str) -> io::Result<Telemetry> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty telemetry file".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
        if row.len() != columns.len() {
            return Err(bad(format!("line {}: {} fields, header has {}", n + 2, row.len(), columns.len())));
        }
        rows.push(row);
    }
    Ok(Telemetry { columns, rows })
}
