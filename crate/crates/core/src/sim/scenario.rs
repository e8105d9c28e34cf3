//! Declarative scenario files (versioned JSON).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControllerGains, ReferenceSource, ScriptSegment};
use crate::dynamics::{MultirotorParams, RigidBodyState, DEFAULT_DT, MAX_DT};
use crate::frames::{Quaternion, Vec3};
use crate::sensors::{GeoOrigin, SensorConfig, SensorKind, SensorScheduler};

pub const SCHEMA_VERSION: u32 = 1;

// Tolerance on "integer number of steps" checks.
const STEP_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    fn invalid(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        ScenarioError::Invalid { path: path.into(), message: message.to_string() }
    }

    /// Field path the error refers to (`.` for the document root).
    pub fn path(&self) -> Option<&str> {
        match self {
            ScenarioError::Parse { path, .. } | ScenarioError::Invalid { path, .. } => Some(path),
            ScenarioError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    /// Simulated duration, s.
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub physics_dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub origin: GeoOrigin,
    #[serde(default)]
    pub output: OutputSpec,
    pub vehicles: Vec<VehicleSpec>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Write every n-th physics step to the CSV.
    pub decimation: u32,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), decimation: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub name: String,
    #[serde(default)]
    pub params: MultirotorParams,
    #[serde(default)]
    pub initial: InitialState,
    pub backend: BackendSpec,
    #[serde(default)]
    pub sensors: SensorConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Heading about +z (ENU), rad.
    pub yaw: f64,
    pub angular_velocity: Vec3,
}

impl InitialState {
    pub fn to_state(&self) -> RigidBodyState {
        RigidBodyState {
            position: self.position,
            velocity: self.velocity,
            attitude: Quaternion::from_yaw(self.yaw),
            angular_velocity: self.angular_velocity,
            time: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    Geometric {
        #[serde(default)]
        gains: ControllerGains,
        reference: ReferenceSource,
    },
    Mavlink {
        #[serde(default = "default_endpoint")]
        endpoint: String,
        #[serde(default = "default_true")]
        lockstep: bool,
        /// Lockstep reply timeout, s.
        #[serde(default = "default_timeout")]
        timeout: f64,
        /// Time to wait for the autopilot to connect, s.
        #[serde(default = "default_handshake_timeout")]
        handshake_timeout: f64,
    },
    Script {
        segments: Vec<ScriptSegment>,
    },
}

fn default_endpoint() -> String {
    "udp:0.0.0.0:4560".into()
}
fn default_true() -> bool {
    true
}
fn default_timeout() -> f64 {
    1.0
}
fn default_handshake_timeout() -> f64 {
    30.0
}

impl BackendSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendSpec::Geometric { .. } => "geometric",
            BackendSpec::Mavlink { .. } => "mavlink",
            BackendSpec::Script { .. } => "script",
        }
    }
}

impl Scenario {
    /// Number of physics steps in the run.
    pub fn steps(&self) -> u64 {
        (self.duration / self.physics_dt).round() as u64
    }

    pub fn vehicle(&self, name: &str) -> Option<&VehicleSpec> {
        self.vehicles.iter().find(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != SCHEMA_VERSION {
            return Err(ScenarioError::invalid(
                "version",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.version),
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ScenarioError::invalid("duration", format!("must be positive, got {}", self.duration)));
        }
        if !(self.physics_dt > 0.0 && self.physics_dt <= MAX_DT) {
            return Err(ScenarioError::invalid("physics_dt", format!("must be in (0, {MAX_DT}], got {}", self.physics_dt)));
        }
        if !is_multiple(self.duration, self.physics_dt) {
            return Err(ScenarioError::invalid("duration", "must be an integer number of physics steps"));
        }
        self.origin.validate().map_err(|e| ScenarioError::invalid("origin", e))?;
        if self.output.decimation == 0 {
            return Err(ScenarioError::invalid("output.decimation", "must be at least 1"));
        }
        if self.vehicles.is_empty() {
            return Err(ScenarioError::invalid("vehicles", "at least one vehicle is required"));
        }
        let mut names = HashSet::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            let at = |field: &str| format!("vehicles[{i}].{field}");
            if v.name.is_empty() || !v.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(ScenarioError::invalid(at("name"), "must be non-empty and use only [A-Za-z0-9_-]"));
            }
            if !names.insert(v.name.as_str()) {
                return Err(ScenarioError::invalid(at("name"), format!("duplicate vehicle name '{}'", v.name)));
            }
            v.params.validate().map_err(|e| ScenarioError::invalid(at("params"), e))?;
            let init = v.initial;
            if !(init.position.is_finite() && init.velocity.is_finite() && init.yaw.is_finite() && init.angular_velocity.is_finite()) {
                return Err(ScenarioError::invalid(at("initial"), "values must be finite"));
            }
            v.sensors.validate().map_err(|e| ScenarioError::invalid(at("sensors"), e))?;
            SensorScheduler::new(v.sensors.rates, self.physics_dt).map_err(|e| ScenarioError::invalid(at("sensors.rates"), e))?;
            for kind in SensorKind::ALL {
                let period = 1.0 / v.sensors.rates.rate(kind);
                if !is_multiple(period, self.physics_dt) {
                    return Err(ScenarioError::invalid(
                        at(&format!("sensors.rates.{}", kind.name())),
                        format!("period {period} s is not a multiple of physics_dt {}", self.physics_dt),
                    ));
                }
            }
            validate_backend(&v.backend, &v.params).map_err(|m| ScenarioError::invalid(at("backend"), m))?;
        }
        Ok(())
    }
}

fn is_multiple(x: f64, dt: f64) -> bool {
    let n = x / dt;
    n.round() >= 1.0 && (n - n.round()).abs() < STEP_EPS * n.max(1.0)
}

fn validate_backend(b: &BackendSpec, params: &MultirotorParams) -> Result<(), String> {
    match b {
        BackendSpec::Geometric { gains, reference } => {
            gains.validate().map_err(|e| e.to_string())?;
            reference.validate().map_err(|e| e.to_string())
        }
        BackendSpec::Mavlink { endpoint, timeout, handshake_timeout, .. } => {
            crate::mavlink::parse_udp_endpoint(endpoint).map_err(|e| format!("endpoint: {e}"))?;
            if !(*timeout > 0.0 && timeout.is_finite()) || !(*handshake_timeout > 0.0 && handshake_timeout.is_finite()) {
                return Err("timeouts must be positive".into());
            }
            Ok(())
        }
        BackendSpec::Script { segments } => crate::control::ScriptBackend::new(segments.clone(), params)
            .map(|_| ())
            .map_err(|e| e.to_string()),
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Parse { path, message: e.into_inner().to_string() }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "duration": 10,
        "vehicles": [
            {"name": "a", "backend": {"type": "geometric", "reference": {"type": "hover", "position": [0, 0, 1]}}}
        ]
    }"#;

    #[test]
    fn minimal_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.physics_dt, 0.004);
        assert_eq!(s.steps(), 2500);
        let v = &s.vehicles[0];
        assert_eq!(v.sensors.rates.imu, 250.0);
        assert_eq!(v.sensors.rates.baro, 250.0);
        assert_eq!(v.sensors.rates.mag, 250.0);
        assert_eq!(v.sensors.rates.gps, 1.0);
        assert_eq!(v.params, MultirotorParams::default());
        assert_eq!(s.output.decimation, 1);
    }

    #[test]
    fn negative_duration_names_field() {
        let text = MINIMAL.replace("\"duration\": 10", "\"duration\": -1");
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.path(), Some("duration"));
    }

    #[test]
    fn duplicate_names_rejected() {
        let v = r#"{"name": "a", "backend": {"type": "geometric", "reference": {"type": "hover", "position": [0, 0, 1]}}}"#;
        let text = format!(r#"{{"version": 1, "duration": 1, "vehicles": [{v}, {v}]}}"#);
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.path(), Some("vehicles[1].name"));
        assert!(e.to_string().contains("duplicate"));
    }

    #[test]
    fn unknown_field_has_path() {
        let text = MINIMAL.replace("\"name\": \"a\",", "\"name\": \"a\", \"colour\": 3,");
        let e = parse_scenario(&text).unwrap_err();
        assert!(matches!(e, ScenarioError::Parse { .. }));
        assert_eq!(e.path(), Some("vehicles[0].colour"));
    }

    #[test]
    fn nested_unknown_field_path() {
        let text = MINIMAL.replace("\"position\": [0, 0, 1]", "\"position\": [0, 0, 1], \"speed\": 2");
        let e = parse_scenario(&text).unwrap_err();
        // tagged enums are buffered, so the path stops at the enum
        assert_eq!(e.path(), Some("vehicles[0].backend"));
        assert!(e.to_string().contains("speed"), "{e}");
    }

    #[test]
    fn missing_required_field() {
        let e = parse_scenario(r#"{"version": 1, "vehicles": []}"#).unwrap_err();
        assert!(e.to_string().contains("duration"), "{e}");
    }

    #[test]
    fn wrong_version() {
        let e = parse_scenario(&MINIMAL.replace("\"version\": 1", "\"version\": 7")).unwrap_err();
        assert_eq!(e.path(), Some("version"));
    }

    #[test]
    fn rate_must_align_with_dt() {
        let text = MINIMAL.replace(
            "\"name\": \"a\",",
            "\"name\": \"a\", \"sensors\": {\"rates\": {\"gps\": 3}},",
        );
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.path(), Some("vehicles[0].sensors.rates.gps"));
        let text = MINIMAL.replace(
            "\"name\": \"a\",",
            "\"name\": \"a\", \"sensors\": {\"rates\": {\"imu\": 500}},",
        );
        let e = parse_scenario(&text).unwrap_err();
        assert_eq!(e.path(), Some("vehicles[0].sensors.rates"));
    }

    #[test]
    fn round_trips_through_json() {
        let s = parse_scenario(MINIMAL).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }
}
