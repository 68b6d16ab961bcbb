//! Counter-based random number generation.
//!
//! Every simulation in this crate is a pure function of `(seed, stream)`:
//! a [`CounterRng`] produces the i-th output by hashing a counter, so
//! independent streams can run in parallel in any order and still reproduce
//! bit-identical results. Gaussian variates come from Box–Muller on the
//! counter stream.

use crate::math;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; a full-avalanche 64-bit permutation.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed counter generator. `next_u64()` returns `mix64(key + i*GOLDEN)`
/// for the running counter `i`, which is the SplitMix64 sequence keyed by
/// `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    ctr: u64,
    spare_gauss: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(seed ^ mix64(stream.wrapping_mul(GOLDEN) ^ 0x5851_f42d_4c95_7f2d));
        CounterRng { key, ctr: 0, spare_gauss: None }
    }

    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        let z = self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN));
        self.ctr = self.ctr.wrapping_add(1);
        mix64(z)
    }

    /// Uniform in the half-open interval (0, 1].
    #[inline(always)]
    pub fn next_unit(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in `0..n`.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        // Multiply-shift; the modulo bias is below 2^-64 * n and irrelevant
        // at the sample sizes used here.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Standard normal via Box–Muller, caching the second variate.
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gauss.take() {
            return g;
        }
        let u1 = self.next_unit();
        let u2 = self.next_unit();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare_gauss = Some(r * math::sin(theta));
        r * math::cos(theta)
    }
}
