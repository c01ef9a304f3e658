//! Fully specified pseudo-random generator for reproducible frame checks.
//!
//! A 64-bit linear congruential generator with Knuth's MMIX constants:
//! `state <- state * 6364136223846793005 + 1442695040888963407` (mod 2^64).
//! Uniform doubles take the top 53 bits of the state, so every
//! implementation seeded identically produces bit-identical streams.

#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Lcg64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(Self::MULTIPLIER)
            .wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Uniform double in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform double in [0, hi).
    pub fn next_scaled(&mut self, hi: f64) -> f64 {
        self.next_unit() * hi
    }

    /// Row-major buffer of `len` uniform values in [0, hi).
    pub fn fill(&mut self, len: usize, hi: f64) -> Vec<f64> {
        (0..len).map(|_| self.next_scaled(hi)).collect()
    }
}
