//! Seeded random streams.
//!
//! Stream contract (version 1): a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`. Uniform draws in `[0, 1)` are
//! `(next_u64() >> 11) * 2^-53`. Standard normals come in pairs from Box-Muller on two
//! consecutive uniforms `u1, u2`: `r = sqrt(-2 ln(1 - u1))`, giving
//! `(r cos 2 pi u2, r sin 2 pi u2)`. A complex Gaussian uses one pair as
//! `(re, im) / sqrt(2)`. Any implementation following these rules reproduces
//! the same models and probe vectors.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::C64;

pub const STREAM_VERSION: u32 = 1;

pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * u2;
        (r * phi.cos(), r * phi.sin())
    }

    pub fn complex_normal(&mut self) -> C64 {
        let (a, b) = self.normal_pair();
        C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn complex_vector(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.complex_normal()).collect()
    }

    /// Uniformly distributed unit vector in `C^n`.
    pub fn unit_vector(&mut self, n: usize) -> Vec<C64> {
        let mut v = self.complex_vector(n);
        crate::linalg::normalize(&mut v);
        v
    }
}

/// Derives an independent seed for sub-task `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
