//! Deterministic sampling: Halton low-discrepancy sequences with a
//! seed-controlled phase, and a SplitMix64 generator for the few places
//! that want plain pseudo-randomness. No OS entropy anywhere; identical
//! inputs give identical samples.

use crate::geometry::{Point, SpaceTimeBox};

const PRIMES: [u64; 11] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];

fn radical_inverse(base: u64, mut i: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    r
}

/// Halton sequence in [0,1)^dim. The seed offsets the start index so
/// different seeds give different (still low-discrepancy) point sets.
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "halton sampler supports up to 11 dims");
        Halton { dim, index: 20 + seed.wrapping_mul(7919) % 1_000_003 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        (0..self.dim)
            .map(|d| radical_inverse(PRIMES[d], self.index))
            .collect()
    }
}

/// Halton points mapped into a space-time box.
pub struct BoxSampler {
    halton: Halton,
    bbox: SpaceTimeBox,
}

impl BoxSampler {
    pub fn new(bbox: &SpaceTimeBox, seed: u64) -> Self {
        BoxSampler { halton: Halton::new(bbox.dim() + 1, seed), bbox: bbox.clone() }
    }

    pub fn next_point(&mut self) -> Point {
        let u = self.halton.next_point();
        let n = self.bbox.dim();
        let x = (0..n)
            .map(|i| self.bbox.x_min[i] + u[i] * (self.bbox.x_max[i] - self.bbox.x_min[i]))
            .collect();
        let t = self.bbox.t_min + u[n] * (self.bbox.t_max - self.bbox.t_min);
        Point::new(x, t)
    }
}

/// SplitMix64: tiny, fast, reproducible.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
