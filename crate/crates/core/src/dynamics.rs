//! Rigid-body multirotor model: quadratic rotor thrust, torque allocation,
//! linear drag and fixed-step RK4 integration.
//!
//! All quantities are in the simulation convention: positions and velocities in
//! ENU, body rates and torques in FLU.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{quat_derivative, FrameConvert, FrameTag, Quaternion, Vec3};

pub const GRAVITY: f64 = 9.81;
pub const DEFAULT_DT: f64 = 1.0 / 250.0;
pub const MAX_DT: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
    #[error("negative rotor speed {0}")]
    NegativeSpeed(f64),
    #[error("rotor speed {speed} exceeds limit {max}")]
    SpeedAboveLimit { speed: f64, max: f64 },
    #[error("expected {expected} rotor values, got {got}")]
    RotorCountMismatch { expected: usize, got: usize },
    #[error("time step {0} s outside (0, {MAX_DT}]")]
    InvalidTimeStep(f64),
    #[error("non-finite state or input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyState {
    /// m, ENU
    pub position: Vec3,
    /// m/s, ENU
    pub velocity: Vec3,
    pub attitude: Quaternion,
    /// rad/s, FLU body
    pub angular_velocity: Vec3,
    pub time: f64,
}

impl Default for RigidBodyState {
    fn default() -> Self {
        Self {
            position: Vec3::ZERO,
            velocity: Vec3::ZERO,
            attitude: Quaternion::IDENTITY,
            angular_velocity: Vec3::ZERO,
            time: 0.0,
        }
    }
}

impl RigidBodyState {
    pub fn at_rest(position: Vec3) -> Self {
        Self { position, ..Default::default() }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.attitude.is_finite()
            && self.angular_velocity.is_finite()
            && self.time.is_finite()
    }
}

impl FrameConvert for RigidBodyState {
    fn convert_frame(&self, from: FrameTag, to: FrameTag) -> Self {
        Self {
            position: self.position.convert_frame(from, to),
            velocity: self.velocity.convert_frame(from, to),
            attitude: self.attitude.convert_frame(from, to),
            angular_velocity: crate::frames::convert_body(self.angular_velocity, from.body, to.body),
            time: self.time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultirotorParams {
    /// kg
    pub mass: f64,
    /// Diagonal inertia, kg·m²
    pub inertia: Vec3,
    /// Diagonal linear drag, 1/s
    pub drag: Vec3,
    /// Rotor hub positions in the FLU body frame, m
    pub rotor_positions: Vec<Vec3>,
    /// +1 / -1 per rotor; must alternate starting with +1
    pub spin_signs: Vec<f64>,
    /// N·s²/rad²
    pub c_thrust: f64,
    /// Reaction torque coefficient, m
    pub k_torque: f64,
    /// rad/s
    pub max_rotor_speed: f64,
    pub gravity: f64,
}

impl Default for MultirotorParams {
    fn default() -> Self {
        Self::quad_x(0.25)
    }
}

impl MultirotorParams {
    /// Iris-sized quad in X configuration with arm length `arm`.
    ///
    /// Rotors are ordered front-right, front-left, back-left, back-right so that
    /// the spin direction alternates with the index.
    pub fn quad_x(arm: f64) -> Self {
        let a = arm * std::f64::consts::FRAC_1_SQRT_2;
        Self {
            mass: 1.5,
            inertia: Vec3::new(0.029, 0.029, 0.055),
            drag: Vec3::new(0.26, 0.26, 0.0),
            rotor_positions: vec![
                Vec3::new(a, -a, 0.0),
                Vec3::new(a, a, 0.0),
                Vec3::new(-a, a, 0.0),
                Vec3::new(-a, -a, 0.0),
            ],
            spin_signs: vec![1.0, -1.0, 1.0, -1.0],
            c_thrust: 8.55e-6,
            k_torque: 0.06,
            max_rotor_speed: 1100.0,
            gravity: GRAVITY,
        }
    }

    pub fn rotor_count(&self) -> usize {
        self.rotor_positions.len()
    }

    pub fn max_rotor_force(&self) -> f64 {
        self.c_thrust * self.max_rotor_speed * self.max_rotor_speed
    }

    /// Rotor speed at which equal rotors exactly cancel gravity.
    pub fn hover_speed(&self) -> f64 {
        (self.mass * self.gravity / (self.rotor_count() as f64 * self.c_thrust)).sqrt()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::InvalidParams(m.to_string()));
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad("mass must be positive");
        }
        if !(self.inertia.x > 0.0 && self.inertia.y > 0.0 && self.inertia.z > 0.0 && self.inertia.is_finite()) {
            return bad("inertia components must be positive");
        }
        if !self.drag.is_finite() || self.drag.x < 0.0 || self.drag.y < 0.0 || self.drag.z < 0.0 {
            return bad("drag coefficients must be non-negative");
        }
        let n = self.rotor_count();
        if n < 4 || !n.is_multiple_of(2) {
            return bad("rotor count must be even and at least 4");
        }
        if self.spin_signs.len() != n {
            return bad("spin_signs length must match rotor_positions");
        }
        for (i, s) in self.spin_signs.iter().enumerate() {
            let expected = if i % 2 == 0 { 1.0 } else { -1.0 };
            if *s != expected {
                return bad("spin_signs must alternate +1, -1, ... by rotor index");
            }
        }
        if !(self.c_thrust > 0.0 && self.c_thrust.is_finite()) {
            return bad("c_thrust must be positive");
        }
        if !self.k_torque.is_finite() || self.k_torque < 0.0 {
            return bad("k_torque must be non-negative");
        }
        if !(self.max_rotor_speed > 0.0 && self.max_rotor_speed.is_finite()) {
            return bad("max_rotor_speed must be positive");
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return bad("gravity must be positive");
        }
        if self.rotor_positions.iter().any(|p| !p.is_finite()) {
            return bad("rotor positions must be finite");
        }
        Ok(())
    }
}

/// Per-rotor target angular velocities, rad/s.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RotorCommand {
    pub speeds: Vec<f64>,
}

impl RotorCommand {
    pub fn new(speeds: Vec<f64>) -> Self {
        Self { speeds }
    }

    pub fn uniform(n: usize, speed: f64) -> Self {
        Self { speeds: vec![speed; n] }
    }

    pub fn validate(&self, params: &MultirotorParams) -> Result<(), DynamicsError> {
        if self.speeds.len() != params.rotor_count() {
            return Err(DynamicsError::RotorCountMismatch {
                expected: params.rotor_count(),
                got: self.speeds.len(),
            });
        }
        for &s in &self.speeds {
            if !s.is_finite() {
                return Err(DynamicsError::NonFinite);
            }
            if s < 0.0 {
                return Err(DynamicsError::NegativeSpeed(s));
            }
            // small slack for round-off from inverted thrust curves
            if s > params.max_rotor_speed * (1.0 + 1e-12) {
                return Err(DynamicsError::SpeedAboveLimit { speed: s, max: params.max_rotor_speed });
            }
        }
        Ok(())
    }
}

/// Collective thrust along body z and body torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    /// N
    pub thrust: f64,
    /// N·m, FLU
    pub torque: Vec3,
}

/// Quadratic thrust curve `F = c·ω²`.
pub fn rotor_thrust(speed: f64, c_thrust: f64) -> Result<f64, DynamicsError> {
    if !speed.is_finite() || !c_thrust.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    if speed < 0.0 {
        return Err(DynamicsError::NegativeSpeed(speed));
    }
    Ok(c_thrust * speed * speed)
}

/// Sums rotor forces into collective thrust and body torque.
pub fn wrench_from_forces(forces: &[f64], params: &MultirotorParams) -> Result<Wrench, DynamicsError> {
    let n = params.rotor_count();
    if forces.len() != n || params.spin_signs.len() != n {
        return Err(DynamicsError::RotorCountMismatch { expected: n, got: forces.len() });
    }
    let mut thrust = 0.0;
    let mut torque = Vec3::ZERO;
    let mut yaw = 0.0;
    for ((&f, r), s) in forces.iter().zip(&params.rotor_positions).zip(&params.spin_signs) {
        thrust += f;
        // r × (0, 0, f)
        torque.x += r.y * f;
        torque.y -= r.x * f;
        yaw += s * f;
    }
    torque.z = params.k_torque * yaw;
    Ok(Wrench { thrust, torque })
}

pub fn wrench_from_command(cmd: &RotorCommand, params: &MultirotorParams) -> Result<Wrench, DynamicsError> {
    cmd.validate(params)?;
    let forces = cmd
        .speeds
        .iter()
        .map(|&s| rotor_thrust(s, params.c_thrust))
        .collect::<Result<Vec<_>, _>>()?;
    wrench_from_forces(&forces, params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Quaternion,
    pub angular_velocity: Vec3,
}

/// Right-hand side of the rigid-body equations of motion.
pub fn state_derivative(s: &RigidBodyState, w: &Wrench, params: &MultirotorParams) -> StateDerivative {
    let q = s.attitude;
    let thrust_acc = q.rotate(Vec3::E3 * (w.thrust / params.mass));
    let drag_acc = q.rotate(params.drag.component_mul(q.rotate_inverse(s.velocity)));
    let accel = Vec3::new(0.0, 0.0, -params.gravity) + thrust_acc - drag_acc;

    let j = params.inertia;
    let om = s.angular_velocity;
    let ang_acc = (w.torque - om.cross(j.component_mul(om))).component_div(j);

    StateDerivative {
        position: s.velocity,
        velocity: accel,
        attitude: quat_derivative(q, om),
        angular_velocity: ang_acc,
    }
}

fn advance(s: &RigidBodyState, d: &StateDerivative, h: f64) -> RigidBodyState {
    let q = s.attitude;
    let dq = d.attitude;
    RigidBodyState {
        position: s.position + d.position * h,
        velocity: s.velocity + d.velocity * h,
        attitude: Quaternion::new(q.x + dq.x * h, q.y + dq.y * h, q.z + dq.z * h, q.w + dq.w * h),
        angular_velocity: s.angular_velocity + d.angular_velocity * h,
        time: s.time + h,
    }
}

/// One RK4 step with the wrench held constant over the interval.
pub fn step_wrench(
    s: &RigidBodyState,
    w: &Wrench,
    dt: f64,
    params: &MultirotorParams,
) -> Result<RigidBodyState, DynamicsError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(DynamicsError::InvalidTimeStep(dt));
    }
    if !s.is_finite() || !w.thrust.is_finite() || !w.torque.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    let k1 = state_derivative(s, w, params);
    let k2 = state_derivative(&advance(s, &k1, dt / 2.0), w, params);
    let k3 = state_derivative(&advance(s, &k2, dt / 2.0), w, params);
    let k4 = state_derivative(&advance(s, &k3, dt), w, params);

    let comb = |a: f64, b: f64, c: f64, d: f64| (a + 2.0 * b + 2.0 * c + d) / 6.0;
    let comb3 = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| (a + b * 2.0 + c * 2.0 + d) / 6.0;
    let slope = StateDerivative {
        position: comb3(k1.position, k2.position, k3.position, k4.position),
        velocity: comb3(k1.velocity, k2.velocity, k3.velocity, k4.velocity),
        attitude: Quaternion::new(
            comb(k1.attitude.x, k2.attitude.x, k3.attitude.x, k4.attitude.x),
            comb(k1.attitude.y, k2.attitude.y, k3.attitude.y, k4.attitude.y),
            comb(k1.attitude.z, k2.attitude.z, k3.attitude.z, k4.attitude.z),
            comb(k1.attitude.w, k2.attitude.w, k3.attitude.w, k4.attitude.w),
        ),
        angular_velocity: comb3(k1.angular_velocity, k2.angular_velocity, k3.angular_velocity, k4.angular_velocity),
    };
    let mut next = advance(s, &slope, dt);
    next.attitude = next.attitude.normalized();
    if !next.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    Ok(next)
}

/// One RK4 step driven by per-rotor speed targets.
pub fn step(
    s: &RigidBodyState,
    cmd: &RotorCommand,
    dt: f64,
    params: &MultirotorParams,
) -> Result<RigidBodyState, DynamicsError> {
    let w = wrench_from_command(cmd, params)?;
    step_wrench(s, &w, dt, params)
}
