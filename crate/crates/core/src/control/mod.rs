//! Control backends and the tracking controller.
//!
//! A [`ControlBackend`] is owned by one vehicle. On every physics step the
//! simulation loop hands it the current state and any fresh sensor readings,
//! then asks for one [`RotorCommand`].

pub mod allocation;
pub mod geometric;
pub mod trajectory;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{MultirotorParams, RigidBodyState, RotorCommand};
use crate::sensors::SensorReading;

pub use allocation::{allocation_inverse, Allocation, AllocationResult};
pub use geometric::{geometric_control_update, ControlOutput, ControllerGains, GeometricController};
pub use trajectory::{relay_trajectory, FlatReference, ReferenceSource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("trajectory aggressiveness must be positive, got {0}")]
    InvalidAggressiveness(f64),
    #[error("controller gains must all be positive")]
    InvalidGains,
    #[error("allocation: {0}")]
    Allocation(String),
    #[error("non-finite controller input")]
    NonFinite,
    #[error("script: {0}")]
    Script(String),
}

/// Failure reported by a backend; aborts the run.
#[derive(Debug, Error)]
#[error("{backend} backend: {message}")]
pub struct BackendError {
    pub backend: String,
    pub message: String,
    #[source]
    pub source: Option<Box<dyn std::error::Error + Send + Sync>>,
}

impl BackendError {
    pub fn new(backend: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { backend: backend.into(), message: message.to_string(), source: None }
    }

    pub fn with_source<E: std::error::Error + Send + Sync + 'static>(backend: impl Into<String>, err: E) -> Self {
        Self { backend: backend.into(), message: err.to_string(), source: Some(Box::new(err)) }
    }
}

pub trait ControlBackend: Send {
    fn name(&self) -> &str;

    fn start(&mut self) -> Result<(), BackendError> {
        Ok(())
    }

    fn stop(&mut self) {}

    fn receive_state(&mut self, state: &RigidBodyState);

    fn receive_sensor(&mut self, reading: &SensorReading);

    /// Called exactly once per physics step.
    fn rotor_command(&mut self) -> Result<RotorCommand, BackendError>;

    /// Reference being tracked, if the backend has one (telemetry only).
    fn reference(&self) -> Option<FlatReference> {
        None
    }
}

/// Tracks a [`ReferenceSource`] with the geometric controller using ground-truth state.
pub struct GeometricBackend {
    controller: GeometricController,
    source: ReferenceSource,
    state: RigidBodyState,
    last_reference: Option<FlatReference>,
    saturation_count: u64,
}

impl GeometricBackend {
    pub fn new(gains: ControllerGains, params: MultirotorParams, source: ReferenceSource) -> Result<Self, ControlError> {
        gains.validate()?;
        source.validate()?;
        Ok(Self {
            controller: GeometricController::new(gains, params)?,
            source,
            state: RigidBodyState::default(),
            last_reference: None,
            saturation_count: 0,
        })
    }

    /// Steps on which the allocation had to clamp.
    pub fn saturation_count(&self) -> u64 {
        self.saturation_count
    }
}

impl ControlBackend for GeometricBackend {
    fn name(&self) -> &str {
        "geometric"
    }

    fn receive_state(&mut self, state: &RigidBodyState) {
        self.state = *state;
    }

    fn receive_sensor(&mut self, _reading: &SensorReading) {}

    fn rotor_command(&mut self) -> Result<RotorCommand, BackendError> {
        let r = self
            .source
            .sample(self.state.time)
            .map_err(|e| BackendError::with_source("geometric", e))?;
        self.last_reference = Some(r);
        let out = self.controller.update(&self.state, &r);
        if out.saturated || out.thrust_clamped {
            self.saturation_count += 1;
        }
        Ok(out.command)
    }

    fn reference(&self) -> Option<FlatReference> {
        self.last_reference
    }
}

/// One step of a piecewise-constant rotor-speed schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptSegment {
    /// Start time of the segment, s.
    pub t: f64,
    pub speeds: Vec<f64>,
}

/// Replays a fixed rotor-speed schedule; speeds before the first segment are zero.
pub struct ScriptBackend {
    segments: Vec<ScriptSegment>,
    rotor_count: usize,
    time: f64,
}

impl ScriptBackend {
    pub fn new(segments: Vec<ScriptSegment>, params: &MultirotorParams) -> Result<Self, ControlError> {
        let n = params.rotor_count();
        for (i, seg) in segments.iter().enumerate() {
            if seg.speeds.len() != n {
                return Err(ControlError::Script(format!("segment {i} has {} speeds, vehicle has {n} rotors", seg.speeds.len())));
            }
            if seg.speeds.iter().any(|&s| !(0.0..=params.max_rotor_speed).contains(&s)) {
                return Err(ControlError::Script(format!("segment {i} speed outside [0, {}]", params.max_rotor_speed)));
            }
            if i > 0 && !(seg.t > segments[i - 1].t) {
                return Err(ControlError::Script("segment times must be strictly increasing".into()));
            }
        }
        Ok(Self { segments, rotor_count: n, time: 0.0 })
    }

    /// Constant hover speed for the whole run.
    pub fn hover(params: &MultirotorParams) -> Self {
        Self {
            segments: vec![ScriptSegment { t: 0.0, speeds: vec![params.hover_speed(); params.rotor_count()] }],
            rotor_count: params.rotor_count(),
            time: 0.0,
        }
    }
}

impl ControlBackend for ScriptBackend {
    fn name(&self) -> &str {
        "script"
    }

    fn receive_state(&mut self, state: &RigidBodyState) {
        self.time = state.time;
    }

    fn receive_sensor(&mut self, _reading: &SensorReading) {}

    fn rotor_command(&mut self) -> Result<RotorCommand, BackendError> {
        let active = self.segments.iter().rev().find(|s| s.t <= self.time + 1e-12);
        Ok(match active {
            Some(seg) => RotorCommand::new(seg.speeds.clone()),
            None => RotorCommand::uniform(self.rotor_count, 0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{step, DEFAULT_DT};
    use crate::frames::Vec3;

    #[test]
    fn closed_loop_converges_from_offset() {
        let p = MultirotorParams::default();
        let target = Vec3::new(0.0, 0.0, 2.0);
        let mut backend = GeometricBackend::new(
            ControllerGains::default(),
            p.clone(),
            ReferenceSource::Hover { position: target, yaw: 0.0 },
        )
        .unwrap();
        let mut s = RigidBodyState::at_rest(target + Vec3::new(1.0, 0.0, 0.0));
        for _ in 0..2500 {
            backend.receive_state(&s);
            let cmd = backend.rotor_command().unwrap();
            s = step(&s, &cmd, DEFAULT_DT, &p).unwrap();
        }
        assert!((s.position - target).norm() < 0.01, "final error {}", (s.position - target).norm());
    }

    #[test]
    fn script_segments() {
        let p = MultirotorParams::default();
        let mut b = ScriptBackend::new(
            vec![
                ScriptSegment { t: 1.0, speeds: vec![100.0; 4] },
                ScriptSegment { t: 2.0, speeds: vec![200.0; 4] },
            ],
            &p,
        )
        .unwrap();
        let mut at = |t: f64| {
            b.receive_state(&RigidBodyState { time: t, ..Default::default() });
            b.rotor_command().unwrap().speeds[0]
        };
        assert_eq!(at(0.5), 0.0);
        assert_eq!(at(1.0), 100.0);
        assert_eq!(at(2.5), 200.0);
    }

    #[test]
    fn script_validation() {
        let p = MultirotorParams::default();
        assert!(ScriptBackend::new(vec![ScriptSegment { t: 0.0, speeds: vec![1.0; 3] }], &p).is_err());
        assert!(ScriptBackend::new(vec![ScriptSegment { t: 0.0, speeds: vec![5000.0; 4] }], &p).is_err());
        let seg = ScriptSegment { t: 1.0, speeds: vec![1.0; 4] };
        assert!(ScriptBackend::new(vec![seg.clone(), seg], &p).is_err());
    }
}
