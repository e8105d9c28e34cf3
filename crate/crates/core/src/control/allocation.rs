//! Inverse of the rotor allocation: desired thrust and torque to rotor speeds.

use nalgebra::{DMatrix, DVector};

use super::ControlError;
use crate::dynamics::{MultirotorParams, RotorCommand, Wrench};

/// Forward map `[T, τx, τy, τz]ᵀ = A F` and its (pseudo-)inverse for one airframe.
#[derive(Debug, Clone)]
pub struct Allocation {
    forward: DMatrix<f64>,
    inverse: DMatrix<f64>,
    max_force: f64,
    c_thrust: f64,
}

/// Result of inverting a wrench.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub forces: Vec<f64>,
    pub command: RotorCommand,
    /// Some rotor hit zero or full thrust.
    pub saturated: bool,
}

impl Allocation {
    pub fn new(params: &MultirotorParams) -> Result<Self, ControlError> {
        params.validate().map_err(|e| ControlError::Allocation(e.to_string()))?;
        let n = params.rotor_count();
        let mut a = DMatrix::<f64>::zeros(4, n);
        for (i, (r, s)) in params.rotor_positions.iter().zip(&params.spin_signs).enumerate() {
            a[(0, i)] = 1.0;
            a[(1, i)] = r.y;
            a[(2, i)] = -r.x;
            a[(3, i)] = params.k_torque * s;
        }
        let inverse = if n == 4 {
            a.clone().try_inverse()
        } else {
            a.clone().pseudo_inverse(1e-12).ok()
        }
        .ok_or_else(|| ControlError::Allocation("allocation matrix is singular".into()))?;
        // full row rank check: A A⁺ must be the identity
        let check = &a * &inverse;
        if (check - DMatrix::<f64>::identity(4, 4)).amax() > 1e-9 {
            return Err(ControlError::Allocation("allocation matrix does not have full rank".into()));
        }
        Ok(Self { forward: a, inverse, max_force: params.max_rotor_force(), c_thrust: params.c_thrust })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.forward
    }

    /// Unconstrained per-rotor forces for `w`.
    pub fn forces(&self, w: &Wrench) -> Vec<f64> {
        let rhs = DVector::from_column_slice(&[w.thrust, w.torque.x, w.torque.y, w.torque.z]);
        (&self.inverse * rhs).iter().copied().collect()
    }

    /// Forces clamped to `[0, F_max]`. When clamping is needed the yaw torque
    /// request is dropped first, then remaining violations are clamped.
    pub fn solve(&self, w: &Wrench) -> AllocationResult {
        let in_range = |f: &[f64]| f.iter().all(|&x| (0.0..=self.max_force).contains(&x));
        let mut forces = self.forces(w);
        let mut saturated = false;
        if !in_range(&forces) {
            saturated = true;
            let mut reduced = *w;
            reduced.torque.z = 0.0;
            forces = self.forces(&reduced);
        }
        for f in forces.iter_mut() {
            *f = f.clamp(0.0, self.max_force);
        }
        let speeds = forces.iter().map(|&f| (f / self.c_thrust).sqrt()).collect();
        AllocationResult { forces, command: RotorCommand::new(speeds), saturated }
    }
}

/// Rotor speeds realising `w` on the airframe described by `params`.
pub fn allocation_inverse(w: &Wrench, params: &MultirotorParams) -> Result<AllocationResult, ControlError> {
    Ok(Allocation::new(params)?.solve(w))
}
