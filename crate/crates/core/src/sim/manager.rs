//! Vehicles and the registry that owns them.

use std::time::Duration;

use thiserror::Error;

use crate::control::{BackendError, ControlBackend, GeometricBackend, ReferenceSource, ScriptBackend};
use crate::dynamics::{state_derivative, step_wrench, wrench_from_command, DynamicsError, MultirotorParams, RigidBodyState};
use crate::mavlink::{parse_udp_endpoint, HilConfig, HilSession, MavlinkBackend, UdpTransport};
use crate::sensors::{GeoOrigin, LatestReadings, SensorError, SensorKind, SensorSuite};

use super::scenario::{BackendSpec, VehicleSpec};
use super::telemetry::TelemetryRecord;

#[derive(Debug, Error)]
pub enum ManagerError {
    #[error("vehicle '{0}' already exists")]
    Duplicate(String),
    #[error("no vehicle named '{0}'")]
    NotFound(String),
}

/// Failure while stepping one vehicle.
#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("sensors: {0}")]
    Sensor(#[from] SensorError),
}

pub struct Vehicle {
    name: String,
    params: MultirotorParams,
    state: RigidBodyState,
    backend: Box<dyn ControlBackend>,
    sensors: SensorSuite,
    latest: LatestReadings,
    sensor_counts: [u64; 4],
    reference: Option<ReferenceSource>,
    step: u64,
    started: bool,
}

impl std::fmt::Debug for Vehicle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Vehicle")
            .field("name", &self.name)
            .field("backend", &self.backend.name())
            .field("step", &self.step)
            .field("state", &self.state)
            .finish()
    }
}

impl Vehicle {
    pub fn new(
        name: impl Into<String>,
        params: MultirotorParams,
        initial: RigidBodyState,
        backend: Box<dyn ControlBackend>,
        sensors: SensorSuite,
    ) -> Self {
        Self {
            name: name.into(),
            params,
            state: initial,
            backend,
            sensors,
            latest: LatestReadings::default(),
            sensor_counts: [0; 4],
            reference: None,
            step: 0,
            started: false,
        }
    }

    /// Builds a vehicle and its backend from a scenario entry. MAVLink backends bind their socket here.
    pub fn from_spec(
        spec: &VehicleSpec,
        index: usize,
        physics_dt: f64,
        seed: u64,
        origin: &GeoOrigin,
    ) -> Result<Self, BackendError> {
        let sensors = SensorSuite::new(spec.sensors, physics_dt, seed, index as u64, spec.params.gravity)
            .map_err(|e| BackendError::with_source("sensors", e))?;
        let mut reference = None;
        let backend: Box<dyn ControlBackend> = match &spec.backend {
            BackendSpec::Geometric { gains, reference: r } => {
                reference = Some(r.clone());
                Box::new(
                    GeometricBackend::new(*gains, spec.params.clone(), r.clone())
                        .map_err(|e| BackendError::with_source("geometric", e))?,
                )
            }
            BackendSpec::Script { segments } => Box::new(
                ScriptBackend::new(segments.clone(), &spec.params).map_err(|e| BackendError::with_source("script", e))?,
            ),
            BackendSpec::Mavlink { endpoint, lockstep, timeout, handshake_timeout } => {
                let addr = parse_udp_endpoint(endpoint).map_err(|e| BackendError::with_source("mavlink", e))?;
                let transport = UdpTransport::bind(addr).map_err(|e| BackendError::with_source("mavlink", e))?;
                log::info!("{}: waiting for autopilot on udp {addr}", spec.name);
                let config = HilConfig {
                    lockstep: *lockstep,
                    timeout: Duration::from_secs_f64(*timeout),
                    handshake_timeout: Duration::from_secs_f64(*handshake_timeout),
                    ..HilConfig::default()
                };
                let session = HilSession::new(Box::new(transport), config);
                Box::new(MavlinkBackend::new(session, &spec.params, *origin))
            }
        };
        let mut v = Vehicle::new(spec.name.clone(), spec.params.clone(), spec.initial.to_state(), backend, sensors);
        v.reference = reference;
        Ok(v)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &MultirotorParams {
        &self.params
    }

    pub fn state(&self) -> &RigidBodyState {
        &self.state
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    /// Reference source from the scenario, when the backend tracks one.
    pub fn reference_source(&self) -> Option<&ReferenceSource> {
        self.reference.as_ref()
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn latest_readings(&self) -> &LatestReadings {
        &self.latest
    }

    /// Samples produced so far, per sensor kind.
    pub fn sensor_count(&self, kind: SensorKind) -> u64 {
        self.sensor_counts[kind as usize]
    }

    pub fn start(&mut self) -> Result<(), BackendError> {
        if !self.started {
            self.backend.start()?;
            self.started = true;
        }
        Ok(())
    }

    pub fn stop(&mut self) {
        if self.started {
            self.backend.stop();
            self.started = false;
        }
    }

    /// Advances one physics step: command from the current state and latest readings,
    /// RK4 step, then sensors due at the new time. Returns the pre-step record.
    pub fn step(&mut self, dt: f64, origin: &GeoOrigin) -> Result<TelemetryRecord, StepError> {
        self.start()?;
        self.backend.receive_state(&self.state);
        let cmd = self.backend.rotor_command()?;
        cmd.validate(&self.params)?;
        let record = TelemetryRecord {
            step: self.step,
            state: self.state,
            reference: self.backend.reference(),
            rotor_speeds: cmd.speeds.clone(),
            latest: self.latest,
        };

        let wrench = wrench_from_command(&cmd, &self.params)?;
        let mut next = step_wrench(&self.state, &wrench, dt, &self.params)?;
        // pin time to the step grid so long runs do not accumulate rounding
        next.time = (self.step + 1) as f64 * dt;
        let accel = state_derivative(&next, &wrench, &self.params).velocity;
        let readings = self.sensors.sample_due(self.step + 1, &next, accel, origin)?;
        for r in &readings {
            self.backend.receive_sensor(r);
            self.latest.update(r);
            self.sensor_counts[r.kind() as usize] += 1;
        }
        self.state = next;
        self.step += 1;
        Ok(record)
    }
}

impl Drop for Vehicle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Registry of vehicles in insertion order.
#[derive(Debug, Default)]
pub struct VehicleManager {
    vehicles: Vec<Vehicle>,
}

impl VehicleManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vehicle(&mut self, vehicle: Vehicle) -> Result<(), ManagerError> {
        if self.vehicles.iter().any(|v| v.name == vehicle.name) {
            return Err(ManagerError::Duplicate(vehicle.name.clone()));
        }
        self.vehicles.push(vehicle);
        Ok(())
    }

    pub fn get_vehicle(&self, name: &str) -> Result<&Vehicle, ManagerError> {
        self.vehicles.iter().find(|v| v.name == name).ok_or_else(|| ManagerError::NotFound(name.into()))
    }

    pub fn get_vehicle_mut(&mut self, name: &str) -> Result<&mut Vehicle, ManagerError> {
        self.vehicles.iter_mut().find(|v| v.name == name).ok_or_else(|| ManagerError::NotFound(name.into()))
    }

    /// Removes a vehicle and stops its backend session.
    pub fn remove_vehicle(&mut self, name: &str) -> Result<Vehicle, ManagerError> {
        let i = self.vehicles.iter().position(|v| v.name == name).ok_or_else(|| ManagerError::NotFound(name.into()))?;
        let mut v = self.vehicles.remove(i);
        v.stop();
        Ok(v)
    }

    pub fn list(&self) -> Vec<&str> {
        self.vehicles.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vehicle> {
        self.vehicles.iter()
    }

    pub fn vehicles_mut(&mut self) -> &mut [Vehicle] {
        &mut self.vehicles
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlBackend;
    use crate::dynamics::RotorCommand;
    use crate::frames::Vec3;
    use crate::sensors::{SensorConfig, SensorReading};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::Arc;

    struct Probe(Arc<AtomicBool>);

    impl ControlBackend for Probe {
        fn name(&self) -> &str {
            "probe"
        }
        fn stop(&mut self) {
            self.0.store(true, Ordering::SeqCst);
        }
        fn receive_state(&mut self, _: &RigidBodyState) {}
        fn receive_sensor(&mut self, _: &SensorReading) {}
        fn rotor_command(&mut self) -> Result<RotorCommand, BackendError> {
            Ok(RotorCommand::uniform(4, 0.0))
        }
    }

    fn vehicle(name: &str, stopped: Arc<AtomicBool>) -> Vehicle {
        let params = MultirotorParams::default();
        let sensors = SensorSuite::new(SensorConfig::noiseless(), 0.004, 0, 0, params.gravity).unwrap();
        Vehicle::new(name, params, RigidBodyState::at_rest(Vec3::ZERO), Box::new(Probe(stopped)), sensors)
    }

    #[test]
    fn add_get_list() {
        let mut m = VehicleManager::new();
        m.add_vehicle(vehicle("a", Default::default())).unwrap();
        m.add_vehicle(vehicle("b", Default::default())).unwrap();
        assert_eq!(m.list(), vec!["a", "b"]);
        assert_eq!(m.get_vehicle("b").unwrap().name(), "b");
    }

    #[test]
    fn unknown_is_not_found() {
        let m = VehicleManager::new();
        assert!(matches!(m.get_vehicle("x"), Err(ManagerError::NotFound(_))));
    }

    #[test]
    fn duplicate_rejected_registry_unchanged() {
        let mut m = VehicleManager::new();
        m.add_vehicle(vehicle("a", Default::default())).unwrap();
        let e = m.add_vehicle(vehicle("a", Default::default()));
        assert!(matches!(e, Err(ManagerError::Duplicate(_))));
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn remove_stops_backend() {
        let flag = Arc::new(AtomicBool::new(false));
        let mut m = VehicleManager::new();
        m.add_vehicle(vehicle("a", flag.clone())).unwrap();
        m.get_vehicle_mut("a").unwrap().step(0.004, &GeoOrigin::default()).unwrap();
        let v = m.remove_vehicle("a").unwrap();
        assert!(flag.load(Ordering::SeqCst));
        assert!(m.is_empty());
        assert_eq!(v.steps_taken(), 1);
    }

    #[test]
    fn free_fall_counts_sensors() {
        let mut v = vehicle("a", Default::default());
        let origin = GeoOrigin::default();
        for _ in 0..250 {
            v.step(0.004, &origin).unwrap();
        }
        assert_eq!(v.sensor_count(SensorKind::Imu), 250);
        assert_eq!(v.sensor_count(SensorKind::Gps), 1);
        let imu = v.latest_readings().imu.unwrap();
        // free fall: accelerometer reads ~zero specific force
        assert!(imu.accel.norm() < 1e-9);
        assert!((v.state().time - 1.0).abs() < 1e-12);
    }
}
