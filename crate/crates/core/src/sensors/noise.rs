use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::frames::Vec3;

/// Deterministic RNG used by every stochastic sensor stream.
pub type SensorRng = ChaCha8Rng;

/// Independent stream for one sensor of one vehicle.
pub fn stream_rng(seed: u64, stream: u64) -> SensorRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// White noise plus a random-walk bias: `b[k+1] = b[k] + σ_walk·√dt·n[k]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseProcess {
    /// Per-sample standard deviation of the white component.
    pub sigma_white: f64,
    /// Random-walk diffusion, units per √s.
    pub sigma_walk: f64,
    /// Current bias value (initial value when configured).
    pub bias: f64,
}

impl NoiseProcess {
    pub fn new(sigma_white: f64, sigma_walk: f64, bias: f64) -> Self {
        Self { sigma_white, sigma_walk, bias }
    }

    pub fn white(sigma_white: f64) -> Self {
        Self::new(sigma_white, 0.0, 0.0)
    }

    pub fn is_valid(&self) -> bool {
        self.sigma_white >= 0.0 && self.sigma_walk >= 0.0 && self.bias.is_finite() && self.sigma_white.is_finite() && self.sigma_walk.is_finite()
    }

    /// Advances the bias by `dt` and returns `(white, bias)`.
    ///
    /// Two normals are always drawn so the stream layout does not depend on
    /// which sigmas happen to be zero.
    pub fn draw<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> (f64, f64) {
        let n_walk: f64 = rng.sample(StandardNormal);
        let n_white: f64 = rng.sample(StandardNormal);
        self.bias += self.sigma_walk * dt.sqrt() * n_walk;
        (self.sigma_white * n_white, self.bias)
    }

    /// White noise plus bias after advancing the walk.
    pub fn sample<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> f64 {
        let (w, b) = self.draw(dt, rng);
        w + b
    }
}

/// One [`NoiseProcess`] per axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseProcess3 {
    pub x: NoiseProcess,
    pub y: NoiseProcess,
    pub z: NoiseProcess,
}

impl NoiseProcess3 {
    pub fn uniform(p: NoiseProcess) -> Self {
        Self { x: p, y: p, z: p }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_valid() && self.y.is_valid() && self.z.is_valid()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> Vec3 {
        Vec3::new(self.x.sample(dt, rng), self.y.sample(dt, rng), self.z.sample(dt, rng))
    }

    pub fn bias(&self) -> Vec3 {
        Vec3::new(self.x.bias, self.y.bias, self.z.bias)
    }
}
