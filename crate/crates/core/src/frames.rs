//! Vector and quaternion algebra plus the ENU/FLU <-> NED/FRD frame conversions.
//!
//! Quaternions use the Hamilton product and are stored in `[x, y, z, w]` order.
//! A vehicle attitude quaternion rotates body-frame vectors into the inertial frame.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("quaternion is not unit norm (|q| = {0})")]
    NotUnit(f64),
    #[error("unsupported frame convention `{0}`")]
    UnsupportedFrame(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const E3: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Returns `None` for vectors too short to normalize.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 1e-12).then(|| self / n)
    }

    /// Element-wise product, used for diagonal matrices stored as vectors.
    pub fn component_mul(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn component_div(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x / o.x, self.y / o.y, self.z / o.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Unit quaternion, Hamilton convention, `[x, y, z, w]` storage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        q.to_xyzw()
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let a = axis.normalized().unwrap_or(Vec3::E3);
        let (s, c) = (0.5 * angle).sin_cos();
        Quaternion::new(a.x * s, a.y * s, a.z * s, c)
    }

    /// Rotation of `yaw` radians about the inertial z axis.
    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_axis_angle(Vec3::E3, yaw)
    }

    pub fn to_xyzw(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }

    pub fn normalized(self) -> Quaternion {
        let n = self.norm();
        Quaternion::new(self.x / n, self.y / n, self.z / n, self.w / n)
    }

    pub fn conjugate(self) -> Quaternion {
        Quaternion::new(-self.x, -self.y, -self.z, self.w)
    }

    /// Inverse of a unit quaternion.
    pub fn inverse(self) -> Quaternion {
        self.conjugate()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.w.is_finite()
    }

    /// Hamilton product `self ⊗ o`.
    pub fn mul(self, o: Quaternion) -> Quaternion {
        let v1 = self.vector();
        let v2 = o.vector();
        let w = self.w * o.w - v1.dot(v2);
        let v = v2 * self.w + v1 * o.w + v1.cross(v2);
        Quaternion::new(v.x, v.y, v.z, w)
    }

    /// `q ⊙ v` without input validation. Assumes unit norm.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = self.vector();
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// `q⁻¹ ⊙ v`, i.e. an inertial vector expressed in the body frame.
    pub fn rotate_inverse(self, v: Vec3) -> Vec3 {
        self.conjugate().rotate(v)
    }

    /// Yaw of the body x axis in the inertial xy plane.
    pub fn yaw(self) -> f64 {
        let fwd = self.rotate(Vec3::new(1.0, 0.0, 0.0));
        fwd.y.atan2(fwd.x)
    }

    /// Rotation matrix as rows; column `i` is the body axis `i` in inertial coordinates.
    pub fn to_rotation_rows(self) -> [[f64; 3]; 3] {
        let ex = self.rotate(Vec3::new(1.0, 0.0, 0.0));
        let ey = self.rotate(Vec3::new(0.0, 1.0, 0.0));
        let ez = self.rotate(Vec3::E3);
        [[ex.x, ey.x, ez.x], [ex.y, ey.y, ez.y], [ex.z, ey.z, ez.z]]
    }
}

/// Rotate `v` by the unit quaternion `q`.
pub fn quat_rotate(q: Quaternion, v: Vec3) -> Result<Vec3, FrameError> {
    if !q.is_finite() || !v.is_finite() {
        return Err(FrameError::NonFinite("quat_rotate"));
    }
    let n = q.norm();
    if (n - 1.0).abs() > 1e-6 {
        return Err(FrameError::NotUnit(n));
    }
    Ok(q.rotate(v))
}

pub type Matrix4 = [[f64; 4]; 4];

/// The 4×4 kinematic matrix with `q̇ = ½ Sk(ω) q` for body rates `ω`, `[x, y, z, w]` ordering.
///
/// ```text
///  [  0    ωz  -ωy   ωx ]
///  [ -ωz   0    ωx   ωy ]
///  [  ωy  -ωx   0    ωz ]
///  [ -ωx  -ωy  -ωz   0  ]
/// ```
pub fn skew4(omega: Vec3) -> Result<Matrix4, FrameError> {
    if !omega.is_finite() {
        return Err(FrameError::NonFinite("skew4"));
    }
    Ok(skew4_unchecked(omega))
}

pub(crate) fn skew4_unchecked(w: Vec3) -> Matrix4 {
    [
        [0.0, w.z, -w.y, w.x],
        [-w.z, 0.0, w.x, w.y],
        [w.y, -w.x, 0.0, w.z],
        [-w.x, -w.y, -w.z, 0.0],
    ]
}

/// `½ Sk(ω) q`.
pub fn quat_derivative(q: Quaternion, omega: Vec3) -> Quaternion {
    let sk = skew4_unchecked(omega);
    let qv = q.to_xyzw();
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(sk.iter()) {
        *o = 0.5 * row.iter().zip(qv.iter()).map(|(a, b)| a * b).sum::<f64>();
    }
    Quaternion::from(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InertialFrame {
    #[serde(rename = "ENU")]
    Enu,
    #[serde(rename = "NED")]
    Ned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BodyFrame {
    #[serde(rename = "FLU")]
    Flu,
    #[serde(rename = "FRD")]
    Frd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameTag {
    pub inertial: InertialFrame,
    pub body: BodyFrame,
}

impl FrameTag {
    /// Simulation-internal convention.
    pub const ENU_FLU: FrameTag = FrameTag { inertial: InertialFrame::Enu, body: BodyFrame::Flu };
    /// Autopilot convention.
    pub const NED_FRD: FrameTag = FrameTag { inertial: InertialFrame::Ned, body: BodyFrame::Frd };
}

impl FromStr for InertialFrame {
    type Err = FrameError;
    fn from_str(s: &str) -> Result<Self, FrameError> {
        match s.to_ascii_uppercase().as_str() {
            "ENU" => Ok(InertialFrame::Enu),
            "NED" => Ok(InertialFrame::Ned),
            _ => Err(FrameError::UnsupportedFrame(s.to_string())),
        }
    }
}

impl FromStr for BodyFrame {
    type Err = FrameError;
    fn from_str(s: &str) -> Result<Self, FrameError> {
        match s.to_ascii_uppercase().as_str() {
            "FLU" => Ok(BodyFrame::Flu),
            "FRD" => Ok(BodyFrame::Frd),
            _ => Err(FrameError::UnsupportedFrame(s.to_string())),
        }
    }
}

/// Parses `"ENU/FLU"`-style tags.
impl FromStr for FrameTag {
    type Err = FrameError;
    fn from_str(s: &str) -> Result<Self, FrameError> {
        let (i, b) = s
            .split_once(['/', '-'])
            .ok_or_else(|| FrameError::UnsupportedFrame(s.to_string()))?;
        Ok(FrameTag { inertial: i.trim().parse()?, body: b.trim().parse()? })
    }
}

const HALF_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;
// 180° about (1, 1, 0)/√2: swaps x/y and flips z.
const ENU_NED_ROT: Quaternion = Quaternion::new(HALF_SQRT2, HALF_SQRT2, 0.0, 0.0);
// 180° about x: flips y and z.
const FLU_FRD_ROT: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);

pub fn convert_inertial(v: Vec3, from: InertialFrame, to: InertialFrame) -> Vec3 {
    if from == to {
        v
    } else {
        Vec3::new(v.y, v.x, -v.z)
    }
}

pub fn convert_body(v: Vec3, from: BodyFrame, to: BodyFrame) -> Vec3 {
    if from == to {
        v
    } else {
        Vec3::new(v.x, -v.y, -v.z)
    }
}

/// Re-expresses an attitude so that rotated vectors commute with the vector conversions.
pub fn convert_attitude(q: Quaternion, from: FrameTag, to: FrameTag) -> Quaternion {
    let mut out = q;
    if from.inertial != to.inertial {
        out = ENU_NED_ROT.mul(out);
    }
    if from.body != to.body {
        out = out.mul(FLU_FRD_ROT.conjugate());
    }
    out
}

/// Types that carry frame-dependent quantities.
pub trait FrameConvert: Sized {
    fn convert_frame(&self, from: FrameTag, to: FrameTag) -> Self;
}

/// Plain inertial-frame vectors (positions, velocities).
impl FrameConvert for Vec3 {
    fn convert_frame(&self, from: FrameTag, to: FrameTag) -> Self {
        convert_inertial(*self, from.inertial, to.inertial)
    }
}

impl FrameConvert for Quaternion {
    fn convert_frame(&self, from: FrameTag, to: FrameTag) -> Self {
        convert_attitude(*self, from, to)
    }
}

/// Converts a vector between conventions named by string tags, e.g. `"ENU/FLU"` to `"NED/FRD"`.
pub fn convert_frame<T: FrameConvert>(value: &T, from: &str, to: &str) -> Result<T, FrameError> {
    let from: FrameTag = from.parse()?;
    let to: FrameTag = to.parse()?;
    Ok(value.convert_frame(from, to))
}
