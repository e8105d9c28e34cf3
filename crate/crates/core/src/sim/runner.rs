//! Main loop: steps every vehicle at the physics rate and writes telemetry.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Barrier;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::sensors::{GeoOrigin, SensorKind};

use super::manager::{StepError, Vehicle, VehicleManager};
use super::scenario::Scenario;
use super::telemetry::{TelemetryRecord, TelemetryWriter};
use super::SimError;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Overrides the scenario's output directory.
    pub out_dir: Option<PathBuf>,
    /// Step vehicles on worker threads (one per vehicle) with a barrier per tick.
    pub parallel: bool,
    /// Sleep so simulated time does not run ahead of wall-clock time.
    pub realtime: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { out_dir: None, parallel: true, realtime: false }
    }
}

/// Running tracking-error statistics.
#[derive(Debug, Clone, Copy, Default)]
struct ErrorStats {
    max: f64,
    max_time: f64,
    sum_sq: f64,
    n: u64,
    last: f64,
}

impl ErrorStats {
    fn add(&mut self, t: f64, e: f64) {
        if self.n == 0 || e > self.max {
            self.max = e;
            self.max_time = t;
        }
        self.sum_sq += e * e;
        self.n += 1;
        self.last = e;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingError {
    pub max: f64,
    pub max_time: f64,
    pub rms: f64,
    pub last: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSummary {
    pub name: String,
    pub backend: String,
    pub steps: u64,
    pub rows: u64,
    pub telemetry: PathBuf,
    /// Absent when the backend tracks no reference.
    pub tracking_error: Option<TrackingError>,
    /// Aggressive-segment window of the reference, s.
    pub maneuver_window: Option<(f64, f64)>,
    pub sensor_samples: BTreeMap<String, u64>,
    pub final_position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub duration: f64,
    pub physics_dt: f64,
    pub steps: u64,
    pub wall_time_s: f64,
    pub completed: bool,
    pub error: Option<String>,
    pub vehicles: Vec<VehicleSummary>,
}

impl RunSummary {
    pub fn vehicle(&self, name: &str) -> Option<&VehicleSummary> {
        self.vehicles.iter().find(|v| v.name == name)
    }
}

struct Lane<'a> {
    vehicle: &'a mut Vehicle,
    writer: TelemetryWriter,
    errors: ErrorStats,
}

impl Lane<'_> {
    fn tick(&mut self, dt: f64, origin: &GeoOrigin) -> Result<(), SimError> {
        let name = self.vehicle.name().to_string();
        let record: TelemetryRecord = self.vehicle.step(dt, origin).map_err(|source| match source {
            StepError::Backend(e) => SimError::Backend { vehicle: name.clone(), time: self.vehicle.state().time, source: e },
            other => SimError::Step { vehicle: name.clone(), time: self.vehicle.state().time, source: other },
        })?;
        if let Some(e) = record.position_error() {
            self.errors.add(record.time(), e);
        }
        self.writer.record(&record).map_err(|e| SimError::io(self.writer.path(), e))
    }

    fn summary(&self) -> VehicleSummary {
        let v = &*self.vehicle;
        let e = self.errors;
        VehicleSummary {
            name: v.name().to_string(),
            backend: v.backend_name().to_string(),
            steps: v.steps_taken(),
            rows: self.writer.rows(),
            telemetry: self.writer.path().to_path_buf(),
            tracking_error: (e.n > 0).then(|| TrackingError {
                max: e.max,
                max_time: e.max_time,
                rms: (e.sum_sq / e.n as f64).sqrt(),
                last: e.last,
            }),
            maneuver_window: v.reference_source().and_then(|r| r.maneuver_window()),
            sensor_samples: SensorKind::ALL.iter().map(|&k| (k.name().to_string(), v.sensor_count(k))).collect(),
            final_position: v.state().position.to_array(),
        }
    }
}

fn pace(start: Instant, sim_time: f64) {
    let target = start + Duration::from_secs_f64(sim_time);
    let now = Instant::now();
    if target > now {
        thread::sleep(target - now);
    }
}

pub fn telemetry_path(dir: &Path, vehicle: &str) -> PathBuf {
    dir.join(format!("{vehicle}.csv"))
}

/// Builds every vehicle of the scenario into a manager.
pub fn build_vehicles(scenario: &Scenario) -> Result<VehicleManager, SimError> {
    let mut manager = VehicleManager::new();
    for (i, spec) in scenario.vehicles.iter().enumerate() {
        let v = Vehicle::from_spec(spec, i, scenario.physics_dt, scenario.seed, &scenario.origin)
            .map_err(|source| SimError::Backend { vehicle: spec.name.clone(), time: 0.0, source })?;
        manager.add_vehicle(v)?;
    }
    Ok(manager)
}

/// Runs a validated scenario to completion, writing one CSV per vehicle and a summary JSON.
///
/// On a runtime failure the telemetry recorded so far and a summary carrying the
/// error are still written before the error is returned.
pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<RunSummary, SimError> {
    scenario.validate()?;
    let dir = options.out_dir.clone().unwrap_or_else(|| scenario.output.dir.clone());
    fs::create_dir_all(&dir).map_err(|e| SimError::io(&dir, e))?;
    let mut manager = build_vehicles(scenario)?;
    run_vehicles(scenario, &mut manager, &dir, options)
}

/// Runs already-built vehicles for the scenario's duration.
pub fn run_vehicles(
    scenario: &Scenario,
    manager: &mut VehicleManager,
    dir: &Path,
    options: &RunOptions,
) -> Result<RunSummary, SimError> {
    let started = Instant::now();
    let steps = scenario.steps();
    let dt = scenario.physics_dt;
    let origin = scenario.origin;

    let mut lanes = Vec::with_capacity(manager.len());
    for v in manager.vehicles_mut() {
        let path = telemetry_path(dir, v.name());
        let writer = TelemetryWriter::create(&path, v.params().rotor_count(), scenario.output.decimation)
            .map_err(|e| SimError::io(&path, e))?;
        lanes.push(Lane { vehicle: v, writer, errors: ErrorStats::default() });
    }

    for lane in &mut lanes {
        let name = lane.vehicle.name().to_string();
        lane.vehicle
            .start()
            .map_err(|source| SimError::Backend { vehicle: name, time: 0.0, source })?;
    }

    let result = if options.parallel && lanes.len() > 1 {
        run_parallel(&mut lanes, steps, dt, &origin, options.realtime)
    } else {
        run_serial(&mut lanes, steps, dt, &origin, options.realtime)
    };

    let mut flush_err = None;
    for lane in &mut lanes {
        if let Err(e) = lane.writer.flush() {
            flush_err.get_or_insert(SimError::io(lane.writer.path(), e));
        }
    }
    let summary = RunSummary {
        seed: scenario.seed,
        duration: scenario.duration,
        physics_dt: dt,
        steps,
        wall_time_s: started.elapsed().as_secs_f64(),
        completed: result.is_ok(),
        error: result.as_ref().err().map(|e| e.to_string()),
        vehicles: lanes.iter().map(Lane::summary).collect(),
    };
    drop(lanes);
    write_summary(dir, &summary)?;
    result?;
    if let Some(e) = flush_err {
        return Err(e);
    }
    Ok(summary)
}

fn run_serial(lanes: &mut [Lane<'_>], steps: u64, dt: f64, origin: &GeoOrigin, realtime: bool) -> Result<(), SimError> {
    let start = Instant::now();
    for k in 0..steps {
        if realtime {
            pace(start, k as f64 * dt);
        }
        for lane in lanes.iter_mut() {
            lane.tick(dt, origin)?;
        }
    }
    Ok(())
}

fn run_parallel(lanes: &mut [Lane<'_>], steps: u64, dt: f64, origin: &GeoOrigin, realtime: bool) -> Result<(), SimError> {
    let barrier = Barrier::new(lanes.len());
    let abort = AtomicBool::new(false);
    let start = Instant::now();
    let results: Vec<Result<(), SimError>> = thread::scope(|scope| {
        let handles: Vec<_> = lanes
            .iter_mut()
            .map(|lane| {
                let (barrier, abort) = (&barrier, &abort);
                scope.spawn(move || {
                    for k in 0..steps {
                        if realtime {
                            pace(start, k as f64 * dt);
                        }
                        let r = lane.tick(dt, origin);
                        if r.is_err() {
                            abort.store(true, Ordering::SeqCst);
                        }
                        // every worker reaches the barrier once per tick, so all see the same abort flag
                        barrier.wait();
                        r?;
                        if abort.load(Ordering::SeqCst) {
                            return Ok(());
                        }
                    }
                    Ok(())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("vehicle worker panicked")).collect()
    });
    results.into_iter().collect()
}

pub fn write_summary(dir: &Path, summary: &RunSummary) -> Result<(), SimError> {
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(summary).map_err(|e| SimError::io(&path, io::Error::other(e)))?;
    fs::write(&path, text + "\n").map_err(|e| SimError::io(&path, e))
}
