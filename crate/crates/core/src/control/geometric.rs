//! Geometric trajectory-tracking controller in the style of Mellinger and
//! Kumar: PD + feedforward on position, attitude tracking on SO(3) with
//! jerk-based angular-velocity feedforward.

use serde::{Deserialize, Serialize};

use super::allocation::Allocation;
use super::trajectory::FlatReference;
use super::ControlError;
use crate::dynamics::{MultirotorParams, RigidBodyState, RotorCommand, Wrench};
use crate::frames::Vec3;

/// Per-axis gains. Position gains are in N/m and N/(m/s), attitude gains in N·m/rad and N·m/(rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerGains {
    pub kp: Vec3,
    pub kv: Vec3,
    pub k_r: Vec3,
    pub k_omega: Vec3,
}

impl Default for ControllerGains {
    /// Tuned for the default 1.5 kg quad on the s = 0.6 relay manoeuvre.
    fn default() -> Self {
        Self {
            kp: Vec3::new(22.0, 22.0, 22.0),
            kv: Vec3::new(10.0, 10.0, 10.0),
            k_r: Vec3::new(3.5, 3.5, 1.0),
            k_omega: Vec3::new(0.5, 0.5, 0.3),
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let positive = |v: Vec3| v.is_finite() && v.x > 0.0 && v.y > 0.0 && v.z > 0.0;
        if positive(self.kp) && positive(self.kv) && positive(self.k_r) && positive(self.k_omega) {
            Ok(())
        } else {
            Err(ControlError::InvalidGains)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub wrench: Wrench,
    pub command: RotorCommand,
    /// Allocation had to clamp at least one rotor.
    pub saturated: bool,
    /// Requested collective thrust was non-positive and was replaced by a small floor.
    pub thrust_clamped: bool,
}

/// Minimum collective thrust as a fraction of weight when the request is non-positive.
const THRUST_FLOOR: f64 = 0.05;

type Rot = [[f64; 3]; 3];

fn columns(x: Vec3, y: Vec3, z: Vec3) -> Rot {
    [[x.x, y.x, z.x], [x.y, y.y, z.y], [x.z, y.z, z.z]]
}

fn col(r: &Rot, j: usize) -> Vec3 {
    Vec3::new(r[0][j], r[1][j], r[2][j])
}

fn mat_t_mul(a: &Rot, b: &Rot) -> Rot {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[k][i] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(a: &Rot, v: Vec3) -> Vec3 {
    Vec3::new(
        a[0][0] * v.x + a[0][1] * v.y + a[0][2] * v.z,
        a[1][0] * v.x + a[1][1] * v.y + a[1][2] * v.z,
        a[2][0] * v.x + a[2][1] * v.y + a[2][2] * v.z,
    )
}

#[derive(Debug, Clone)]
pub struct GeometricController {
    pub gains: ControllerGains,
    params: MultirotorParams,
    allocation: Allocation,
}

impl GeometricController {
    pub fn new(gains: ControllerGains, params: MultirotorParams) -> Result<Self, ControlError> {
        let allocation = Allocation::new(&params)?;
        Ok(Self { gains, params, allocation })
    }

    pub fn params(&self) -> &MultirotorParams {
        &self.params
    }

    /// Desired body wrench for tracking `r` from `state`.
    pub fn wrench(&self, state: &RigidBodyState, r: &FlatReference) -> (Wrench, bool) {
        let g = &self.gains;
        let m = self.params.mass;
        let e_p = r.position - state.position;
        let e_v = r.velocity - state.velocity;
        let f_des = g.kp.component_mul(e_p)
            + g.kv.component_mul(e_v)
            + (r.acceleration + Vec3::E3 * self.params.gravity) * m;

        let rot = state.attitude.to_rotation_rows();
        let z_body = col(&rot, 2);
        let mut thrust = f_des.dot(z_body);
        let mut thrust_clamped = false;
        let floor = THRUST_FLOOR * m * self.params.gravity;
        if !(thrust > 0.0) {
            thrust = floor;
            thrust_clamped = true;
        }

        // desired attitude from the force direction and reference yaw
        let z_des = f_des.normalized().unwrap_or(Vec3::E3);
        let x_c = Vec3::new(r.yaw.cos(), r.yaw.sin(), 0.0);
        let y_des = z_des.cross(x_c).normalized().unwrap_or(Vec3::new(0.0, 1.0, 0.0));
        let x_des = y_des.cross(z_des);
        let rot_des = columns(x_des, y_des, z_des);

        // e_R = ½ vee(R_dᵀR − RᵀR_d)
        let a = mat_t_mul(&rot_des, &rot);
        let e_r = Vec3::new(a[2][1] - a[1][2], a[0][2] - a[2][0], a[1][0] - a[0][1]) * 0.5;

        // angular-velocity feedforward from jerk, expressed in the desired frame
        let f_norm = f_des.norm().max(floor);
        let h_w = (r.jerk - z_des * z_des.dot(r.jerk)) * (m / f_norm);
        let w_des = Vec3::new(-h_w.dot(y_des), h_w.dot(x_des), r.yaw_rate * z_des.z);
        let w_ref = mat_vec(&mat_t_mul(&rot, &rot_des), w_des);
        let e_w = state.angular_velocity - w_ref;

        let om = state.angular_velocity;
        let torque = -g.k_r.component_mul(e_r) - g.k_omega.component_mul(e_w)
            + om.cross(self.params.inertia.component_mul(om));
        (Wrench { thrust, torque }, thrust_clamped)
    }

    pub fn update(&self, state: &RigidBodyState, r: &FlatReference) -> ControlOutput {
        let (wrench, thrust_clamped) = self.wrench(state, r);
        let alloc = self.allocation.solve(&wrench);
        ControlOutput { wrench, command: alloc.command, saturated: alloc.saturated, thrust_clamped }
    }
}

/// One-shot form of [`GeometricController::update`].
pub fn geometric_control_update(
    state: &RigidBodyState,
    reference: &FlatReference,
    gains: &ControllerGains,
    params: &MultirotorParams,
) -> Result<ControlOutput, ControlError> {
    if !state.is_finite() {
        return Err(ControlError::NonFinite);
    }
    Ok(GeometricController::new(*gains, params.clone())?.update(state, reference))
}
