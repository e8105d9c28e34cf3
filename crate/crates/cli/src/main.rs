use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rotorsim_core::mavlink::parse_udp_endpoint;
use rotorsim_core::sim::plot::{error_series, write_plot};
use rotorsim_core::sim::{load_scenario, read_telemetry, run, BackendSpec, RunOptions, Scenario, SimError};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

/// Headless multirotor simulator.
#[derive(Debug, Parser)]
#[command(name = "rotorsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write per-vehicle telemetry plus summary.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the simulated duration, s.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the scenario's output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Drive every vehicle from an external autopilot listening on udp:HOST:PORT;
        /// vehicle i uses PORT + i.
        #[arg(long, value_name = "udp:HOST:PORT")]
        mavlink: Option<String>,
        /// Pace the simulation to wall-clock time.
        #[arg(long)]
        realtime: bool,
        /// Step vehicles on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Tracking error over time from telemetry CSVs, as CSV or SVG (by extension).
    Plot {
        #[arg(long, required = true, num_args = 1..)]
        telemetry: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn apply_overrides(
    scenario: &mut Scenario,
    duration: Option<f64>,
    seed: Option<u64>,
    mavlink: Option<&str>,
) -> Result<(), String> {
    if let Some(d) = duration {
        scenario.duration = d;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    if let Some(spec) = mavlink {
        let base = parse_udp_endpoint(spec).map_err(|e| format!("--mavlink: {e}"))?;
        for (i, v) in scenario.vehicles.iter_mut().enumerate() {
            let mut addr = base;
            addr.set_port(base.port().checked_add(i as u16).ok_or("--mavlink: port range overflow")?);
            v.backend = BackendSpec::Mavlink {
                endpoint: format!("udp:{addr}"),
                lockstep: true,
                timeout: 1.0,
                handshake_timeout: 30.0,
            };
        }
    }
    scenario.validate().map_err(|e| format!("scenario: {e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };

    match cli.command {
        Command::Validate { scenario } => match load_scenario(&scenario) {
            Ok(s) => {
                println!(
                    "{}: ok ({} vehicle(s), {} steps of {} s)",
                    scenario.display(),
                    s.vehicles.len(),
                    s.steps(),
                    s.physics_dt
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_CONFIG, format!("{}: {e}", scenario.display())),
        },
        Command::Run { scenario, duration, seed, out, mavlink, realtime, serial } => {
            let mut s = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", scenario.display())),
            };
            if let Err(e) = apply_overrides(&mut s, duration, seed, mavlink.as_deref()) {
                return fail(EXIT_CONFIG, e);
            }
            let options = RunOptions { out_dir: out, parallel: !serial, realtime };
            match run(&s, &options) {
                Ok(summary) => {
                    for v in &summary.vehicles {
                        match &v.tracking_error {
                            Some(e) => log::info!(
                                "{}: {} rows, max error {:.4} m at t = {:.2} s, rms {:.4} m",
                                v.name,
                                v.rows,
                                e.max,
                                e.max_time,
                                e.rms
                            ),
                            None => log::info!("{}: {} rows", v.name, v.rows),
                        }
                    }
                    log::info!("simulated {} s in {:.2} s wall time", summary.duration, summary.wall_time_s);
                    ExitCode::SUCCESS
                }
                Err(e @ SimError::Scenario(_)) | Err(e @ SimError::Manager(_)) => fail(EXIT_CONFIG, e),
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::Plot { telemetry, out } => {
            let mut series = Vec::new();
            for path in &telemetry {
                let label = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                let t = match read_telemetry(path) {
                    Ok(t) => t,
                    Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", path.display())),
                };
                match error_series(&label, &t) {
                    Ok(s) => series.push(s),
                    Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", path.display())),
                }
            }
            match write_plot(&out, &series) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(EXIT_RUNTIME, format!("{}: {e}", out.display())),
            }
        }
    }
}
