//! Seeded, streamed random number generation.
//!
//! Every randomized routine takes an explicit [`Rng`] value; nothing draws
//! from ambient state. Parallel work derives independent streams as
//! `(master_seed, task_index)`, so results are reproducible regardless of
//! scheduling.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Deterministic generator identified by `(seed, stream)`. Identical
/// identifiers yield identical sequences.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent stream for a parallel task. Stream indices are mixed so
    /// nested derivations do not collide for distinct task paths.
    pub fn derive(&self, task: u64) -> Rng {
        let mixed = self
            .stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(task)
            .wrapping_add(1);
        Rng::with_stream(self.seed, mixed)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.gen_range(lo..hi)
    }

    pub fn uniform_usize(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Standard normal via Box-Muller (pairs cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u1: f64 = self.inner.gen_range(0.0..1.0);
            if u1 <= f64::MIN_POSITIVE {
                continue;
            }
            let u2: f64 = self.inner.gen_range(0.0..1.0);
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = std::f64::consts::TAU * u2;
            self.spare_normal = Some(r * theta.sin());
            return r * theta.cos();
        }
    }

    /// Standard complex normal: real and imaginary parts N(0, 1/2).
    pub fn complex_normal(&mut self) -> num_complex::Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        num_complex::Complex64::new(self.normal() * s, self.normal() * s)
    }
}
