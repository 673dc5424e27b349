//! Deterministic seeded randomness.
//!
//! Every randomized operation takes a [`SeededRng`]: identical seed and
//! call sequence reproduce identical outputs on any platform (the backing
//! generator is ChaCha8, which is platform-independent by construction).
//!
//! Stream-split rule: batch operations that process many vectors assign
//! vector index `i` the independent stream `SeededRng::substream(seed, i)`
//! rather than sharing one generator, so results do not depend on worker
//! count or processing order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededRng {
    /// Master stream for `seed` (stream index 0).
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Independent stream `index` derived from the same master seed.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer draw from [0, n) without modulo bias.
    pub fn uniform_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform draw from [0, 1) with 53-bit resolution.
    pub fn uniform_01(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform draw from the open interval (-1/2, 1/2).
    pub fn uniform_centered(&mut self) -> f64 {
        loop {
            let u = self.uniform_01() - 0.5;
            if u > -0.5 {
                return u;
            }
        }
    }

    /// Uniform draw from the open interval (-c, c), both endpoints excluded.
    pub fn uniform_symmetric(&mut self, c: f64) -> f64 {
        debug_assert!(c > 0.0);
        loop {
            let x = c * (2.0 * self.uniform_01() - 1.0);
            if x > -c && x < c {
                return x;
            }
        }
    }

    /// Standard normal draw via Box-Muller (one value per uniform pair).
    pub fn standard_normal(&mut self) -> f64 {
        let r = loop {
            let r = self.uniform_01();
            if r > 0.0 {
                break r;
            }
        };
        let theta = std::f64::consts::TAU * self.uniform_01();
        (-2.0 * r.ln()).sqrt() * theta.cos()
    }
}
