//! Scenarios, the vehicle manager, the main loop and telemetry output.

pub mod manager;
pub mod plot;
pub mod runner;
pub mod scenario;
pub mod telemetry;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::control::BackendError;

pub use manager::{ManagerError, StepError, Vehicle, VehicleManager};
pub use runner::{run, run_vehicles, RunOptions, RunSummary, TrackingError, VehicleSummary};
pub use scenario::{load_scenario, parse_scenario, BackendSpec, InitialState, Scenario, ScenarioError, VehicleSpec};
pub use telemetry::{read_telemetry, Telemetry, TelemetryRecord, TelemetryWriter};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Manager(#[from] ManagerError),
    #[error("vehicle '{vehicle}' at t = {time:.3} s: {source}")]
    Backend {
        vehicle: String,
        time: f64,
        #[source]
        source: BackendError,
    },
    #[error("vehicle '{vehicle}' at t = {time:.3} s: {source}")]
    Step {
        vehicle: String,
        time: f64,
        #[source]
        source: StepError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl SimError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        SimError::Io { path: path.to_path_buf(), source }
    }

    /// True for errors in the scenario itself, as opposed to failures while running it.
    pub fn is_config(&self) -> bool {
        matches!(self, SimError::Scenario(_) | SimError::Manager(_))
    }
}
