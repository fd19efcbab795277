//! Deterministic pseudo-random streams.
//!
//! Every seeded operation in this crate draws from SplitMix64, chosen so that
//! the streams can be reproduced bit-exactly in any language.  The full
//! recipe:
//!
//! * State is a single `u64`.  Each draw adds the constant
//!   `0x9E3779B97F4A7C15`, then mixes:
//!   `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//!    z *= 0x94D049BB133111EB; z ^= z >> 31` (all wrapping).
//! * A uniform double in `[0, 1)` is `(draw >> 11) * 2^-53`.
//! * A standard normal consumes exactly two draws `u1, u2` (in that order)
//!   and returns `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`; the sine partner is
//!   discarded.
//! * A point of the interior of a probability simplex uses one exponential
//!   `-ln(1 - u)` per coordinate (floored at 1e-12), normalized by the sum.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller (two draws per sample).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Interior point of the `n`-simplex (all coordinates > 0, sum 1).
    pub fn next_simplex(&mut self, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n)
            .map(|_| (-(1.0 - self.next_f64()).ln()).max(1e-12))
            .collect();
        let sum: f64 = v.iter().sum();
        for x in &mut v {
            *x /= sum;
        }
        v
    }
}
