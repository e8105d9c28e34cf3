//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use mavlink::dialects::common::{self as ref_msgs, MavMessage};
use mavlink::MavHeader;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rotorsim_core::dynamics::{step, step_wrench, MultirotorParams, RigidBodyState, RotorCommand, Wrench};
use rotorsim_core::frames::Vec3;
use rotorsim_core::mavlink::{crc16_mcrf4xx, decode_frame, encode_frame, Heartbeat, HilActuatorControls, HilMessage, HilSensor};
use rotorsim_core::sensors::gps::EARTH_RADIUS;
use rotorsim_core::sensors::{barometer_sample, local_to_geodetic, stream_rng, BaroNoise, GeoOrigin, NoiseProcess};
use rotorsim_core::sim::{parse_scenario, read_telemetry, run, RunOptions, RunSummary, Scenario};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1. ISA barometer

/// p(1000 m) evaluated with 40-digit arithmetic.
const P_1000_ORACLE: f64 = 89_874.111_405_900_37;

fn barometer() -> Outcome {
    let origin = GeoOrigin { altitude_m: 0.0, ..GeoOrigin::default() };
    let mut rng = stream_rng(0, 0);
    let at = |h: f64, rng: &mut _| {
        let s = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, h));
        barometer_sample(&s, &origin, &mut BaroNoise::noiseless(), 0.004, rng).unwrap()
    };
    let r0 = at(0.0, &mut rng);
    let r1 = at(1000.0, &mut rng);
    let dp = (r1.pressure - P_1000_ORACLE).abs();
    check(
        r0.temperature == 288.15 && r0.pressure == 101_325.0 && dp < 1.0,
        format!("T(0)={} K, p(0)={} Pa, |p(1000)-oracle|={dp:.3e} Pa", r0.temperature, r0.pressure),
    )
}

// 2. Free fall

fn free_fall() -> Outcome {
    let params = MultirotorParams::default();
    let z0 = 100.0;
    let mut s = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, z0));
    let off = RotorCommand::uniform(params.rotor_count(), 0.0);
    let dt = 0.004;
    for _ in 0..500 {
        s = step(&s, &off, dt, &params).unwrap();
    }
    let t = 2.0;
    let err = (s.position.z - (z0 - 0.5 * params.gravity * t * t)).abs();
    check(err < 1e-6, format!("|z - (z0 - g t^2/2)| = {err:.3e} m after 2 s"))
}

// 3. Attitude kinematics

fn attitude_kinematics() -> Outcome {
    let params = MultirotorParams::default();
    let mut s = RigidBodyState { angular_velocity: Vec3::new(0.0, 0.0, 1.0), ..RigidBodyState::default() };
    let w = Wrench { thrust: params.mass * params.gravity, torque: Vec3::ZERO };
    let mut drift = 0.0f64;
    for _ in 0..250 {
        s = step_wrench(&s, &w, 0.004, &params).unwrap();
        drift = drift.max((s.attitude.norm() - 1.0).abs());
    }
    let yaw_err = (s.attitude.yaw() - 1.0).abs();
    check(yaw_err < 1e-6 && drift < 1e-9, format!("yaw error {yaw_err:.3e} rad, max | |q| - 1 | {drift:.3e}"))
}

// 4. Drag decay

fn drag_decay() -> Outcome {
    let params = MultirotorParams {
        mass: 1.0,
        drag: Vec3::new(0.26, 0.26, 0.0),
        ..MultirotorParams::default()
    };
    let mut s = RigidBodyState { velocity: Vec3::new(1.0, 0.0, 0.0), ..RigidBodyState::default() };
    let w = Wrench { thrust: params.mass * params.gravity, torque: Vec3::ZERO };
    for _ in 0..1250 {
        s = step_wrench(&s, &w, 0.004, &params).unwrap();
    }
    let expected = (-1.3f64).exp();
    let rel = (s.velocity.x - expected).abs() / expected;
    check(rel < 1e-4, format!("vx(5 s) = {:.9}, e^-1.3 = {expected:.9}, relative error {rel:.3e}", s.velocity.x))
}

// 5. GPS projection

/// Forward azimuthal-equidistant projection on the sphere: (lat, lon) in rad to (east, north) in m.
fn forward_aeqd(lat: f64, lon: f64, lat0: f64, lon0: f64) -> (f64, f64) {
    let dl = lon - lon0;
    let cos_c = lat0.sin() * lat.sin() + lat0.cos() * lat.cos() * dl.cos();
    let c = cos_c.clamp(-1.0, 1.0).acos();
    let k = if c.abs() < 1e-12 { 1.0 } else { c / c.sin() };
    let east = EARTH_RADIUS * k * lat.cos() * dl.sin();
    let north = EARTH_RADIUS * k * (lat0.cos() * lat.sin() - lat0.sin() * lat.cos() * dl.cos());
    (east, north)
}

fn gps_projection() -> Outcome {
    let origin = GeoOrigin::default();
    let (lat0, lon0) = (origin.latitude_deg.to_radians(), origin.longitude_deg.to_radians());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 10_000 {
        // box of roughly +-11 km around the origin, keep points within 10 km
        let lat = lat0 + rng.random_range(-1.0..1.0) * 0.1f64.to_radians();
        let lon = lon0 + rng.random_range(-1.0..1.0) * 0.15f64.to_radians();
        let (e, nn) = forward_aeqd(lat, lon, lat0, lon0);
        if e.hypot(nn) > 10_000.0 {
            continue;
        }
        let (lat_d, lon_d) = local_to_geodetic(e, nn, &origin).unwrap();
        worst = worst.max((lat_d.to_radians() - lat).abs()).max((lon_d.to_radians() - lon).abs());
        n += 1;
    }
    check(worst < 1e-9, format!("worst round-trip error {worst:.3e} rad over {n} points"))
}

// 6. Noise statistics

fn noise_statistics() -> Outcome {
    let sigma = 0.02;
    let mut rng = stream_rng(6, 0);
    let mut white = NoiseProcess::white(sigma);
    let n = 1_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let x = white.sample(0.004, &mut rng);
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / n as f64;
    let var = sum_sq / n as f64 - mean * mean;
    let white_rel = (var / (sigma * sigma) - 1.0).abs();

    let (walk, dt, paths) = (6e-4, 0.004, 10_000);
    let checkpoints = [10usize, 50, 100, 200];
    let mut acc = vec![0.0; checkpoints.len()];
    let mut rng = stream_rng(6, 1);
    for _ in 0..paths {
        let mut p = NoiseProcess::new(0.0, walk, 0.0);
        let mut c = 0;
        for k in 1..=*checkpoints.last().unwrap() {
            p.draw(dt, &mut rng);
            if k == checkpoints[c] {
                acc[c] += p.bias * p.bias;
                c += 1;
            }
        }
    }
    let mut walk_rel = 0.0f64;
    for (i, &k) in checkpoints.iter().enumerate() {
        let expected = walk * walk * dt * k as f64;
        walk_rel = walk_rel.max((acc[i] / paths as f64 / expected - 1.0).abs());
    }
    check(
        white_rel < 0.05 && walk_rel < 0.10,
        format!("white variance off by {:.2}%, random-walk variance off by at most {:.2}% at k={checkpoints:?}", white_rel * 100.0, walk_rel * 100.0),
    )
}

// 7. MAVLink codec

fn mavlink_codec() -> Outcome {
    let check_value = crc16_mcrf4xx(b"123456789");
    if check_value != 0x6f91 {
        return Err(format!("CRC check value 0x{check_value:04x}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100_000u32 {
        let msg = match i % 3 {
            0 => HilMessage::HilSensor(HilSensor {
                time_usec: rng.random(),
                acc: [rng.random(), rng.random(), rng.sample(StandardNormal)],
                gyro: [rng.sample(StandardNormal), rng.random(), rng.random()],
                mag: [rng.random(), rng.random(), rng.random()],
                abs_pressure: rng.random_range(200.0..1100.0),
                diff_pressure: 0.0,
                pressure_alt: rng.random_range(-100.0..5000.0),
                temperature: rng.random_range(-40.0..40.0),
                fields_updated: rng.random(),
                id: rng.random(),
            }),
            1 => {
                let mut controls = [0.0f32; 16];
                for c in controls.iter_mut().take(rng.random_range(0..=16)) {
                    *c = rng.random();
                }
                HilMessage::HilActuatorControls(HilActuatorControls {
                    time_usec: rng.random(),
                    flags: rng.random(),
                    controls,
                    mode: rng.random(),
                })
            }
            _ => HilMessage::Heartbeat(Heartbeat { custom_mode: rng.random(), mav_type: rng.random(), ..Heartbeat::simulator() }),
        };
        let bytes = encode_frame(&msg, (i % 256) as u8, 1, 1);
        match decode_frame(&bytes) {
            Ok(f) if f.message == msg => {}
            other => return Err(format!("round trip {i} failed: {other:?}")),
        }
    }

    let golden = [
        (
            MavMessage::HEARTBEAT(ref_msgs::HEARTBEAT_DATA {
                custom_mode: 0,
                mavtype: ref_msgs::MavType::MAV_TYPE_QUADROTOR,
                autopilot: ref_msgs::MavAutopilot::MAV_AUTOPILOT_INVALID,
                base_mode: ref_msgs::MavModeFlag::empty(),
                system_status: ref_msgs::MavState::MAV_STATE_ACTIVE,
                mavlink_version: 3,
            }),
            HilMessage::Heartbeat(Heartbeat::simulator()),
        ),
        (
            MavMessage::HIL_ACTUATOR_CONTROLS(ref_msgs::HIL_ACTUATOR_CONTROLS_DATA {
                time_usec: 8_000,
                flags: ref_msgs::HilActuatorControlsFlags::from_bits_retain(1),
                controls: [0.5; 16],
                mode: ref_msgs::MavModeFlag::from_bits_retain(0x81),
            }),
            HilMessage::HilActuatorControls(HilActuatorControls { time_usec: 8_000, flags: 1, controls: [0.5; 16], mode: 0x81 }),
        ),
    ];
    for (theirs, ours) in &golden {
        let mut bytes = Vec::new();
        let header = MavHeader { system_id: 1, component_id: 1, sequence: 9 };
        mavlink::write_v2_msg(&mut bytes, header, theirs).map_err(|e| e.to_string())?;
        let decoded = decode_frame(&bytes).map_err(|e| format!("golden frame rejected: {e}"))?;
        if &decoded.message != ours {
            return Err(format!("golden frame decoded to {:?}", decoded.message));
        }
    }
    Ok("CRC(\"123456789\") = 0x6f91, 100000 round trips exact, reference-codec frames decode equal".into())
}

// 8-10. Scenario runs

const RELAY: &str = include_str!("../../../scenarios/relay.json");

fn scenario_in(text: &str, dir: &Path, duration: Option<f64>) -> Scenario {
    let mut s = parse_scenario(text).expect("bundled scenario is valid");
    if let Some(d) = duration {
        s.duration = d;
    }
    s.output.dir = dir.to_path_buf();
    s
}

fn run_in(s: &Scenario, parallel: bool) -> Result<RunSummary, String> {
    run(s, &RunOptions { out_dir: None, parallel, realtime: false }).map_err(|e| e.to_string())
}

fn scheduler_counts(tmp: &Path) -> Outcome {
    let s = scenario_in(RELAY, &tmp.join("sched"), Some(10.0));
    let summary = run_in(&s, true)?;
    let mut details = Vec::new();
    let mut ok = true;
    for v in &summary.vehicles {
        let c = &v.sensor_samples;
        ok &= c["imu"] == 2500 && c["baro"] == 2500 && c["mag"] == 2500 && c["gps"] == 10 && v.rows == 2500;
        details.push(format!("{}: imu {} baro {} mag {} gps {} rows {}", v.name, c["imu"], c["baro"], c["mag"], c["gps"], v.rows));
    }
    check(ok, details.join("; "))
}

fn relay_reproduction(tmp: &Path) -> Outcome {
    let s = scenario_in(RELAY, &tmp.join("relay"), None);
    let t0 = Instant::now();
    let summary = run_in(&s, true)?;
    let wall = t0.elapsed().as_secs_f64();
    if summary.vehicles.len() != 2 {
        return Err("relay scenario must have two vehicles".into());
    }
    let mut details = vec![format!("wall {wall:.2} s for {} s simulated", s.duration)];
    let mut ok = wall < 10.0;
    for v in &summary.vehicles {
        let tel = read_telemetry(&v.telemetry).map_err(|e| e.to_string())?;
        let t = tel.column("t").unwrap();
        let err = tel.column("err").unwrap();
        let (w0, w1) = v.maneuver_window.ok_or("relay reference has no manoeuvre window")?;
        let bounded = err.iter().all(|e| e.is_finite());
        let (mut peak, mut peak_t) = (0.0f64, 0.0);
        for (&ti, &ei) in t.iter().zip(&err) {
            if ei > peak {
                peak = ei;
                peak_t = ti;
            }
        }
        // steady state: from 3 s after the aggressive segment ends to the end of the run
        let settled = t.iter().zip(&err).filter(|(&ti, _)| ti >= w1 + 3.0).map(|(_, &e)| e).fold(0.0f64, f64::max);
        let last = *err.last().unwrap();
        let v_ok = bounded && peak < 0.30 && (w0..=w1).contains(&peak_t) && settled < 0.05 && last < peak;
        ok &= v_ok;
        details.push(format!(
            "{}: peak {peak:.4} m at t={peak_t:.2} s (window {w0}-{w1} s), max after t={:.0} s {settled:.4} m, final {last:.4} m",
            v.name,
            w1 + 3.0
        ));
    }
    check(ok, details.join("; "))
}

fn determinism(tmp: &Path) -> Outcome {
    let a = scenario_in(RELAY, &tmp.join("det_a"), None);
    let b = scenario_in(RELAY, &tmp.join("det_b"), None);
    let c = scenario_in(RELAY, &tmp.join("det_serial"), None);
    run_in(&a, true)?;
    run_in(&b, true)?;
    run_in(&c, false)?;
    let mut compared = 0;
    for v in &a.vehicles {
        let name = format!("{}.csv", v.name);
        let fa = fs::read(a.output.dir.join(&name)).map_err(|e| e.to_string())?;
        let fb = fs::read(b.output.dir.join(&name)).map_err(|e| e.to_string())?;
        let fc = fs::read(c.output.dir.join(&name)).map_err(|e| e.to_string())?;
        if fa != fb {
            return Err(format!("{name} differs between two runs with the same seed"));
        }
        if fa != fc {
            return Err(format!("{name} differs between parallel and serial stepping"));
        }
        compared += fa.len();
    }
    Ok(format!("two runs and a serial run byte-identical ({compared} bytes per run)"))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("barometer ISA", Box::new(barometer)),
        ("free fall", Box::new(free_fall)),
        ("attitude kinematics", Box::new(attitude_kinematics)),
        ("drag decay", Box::new(drag_decay)),
        ("GPS projection", Box::new(gps_projection)),
        ("noise statistics", Box::new(noise_statistics)),
        ("MAVLink codec", Box::new(mavlink_codec)),
        ("sensor scheduler", Box::new(|| scheduler_counts(tmp.path()))),
        ("relay manoeuvre", Box::new(|| relay_reproduction(tmp.path()))),
        ("determinism", Box::new(|| determinism(tmp.path()))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(d) => println!("criterion {:>2} {name}: PASS ({ms:.0} ms) {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({ms:.0} ms) {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
