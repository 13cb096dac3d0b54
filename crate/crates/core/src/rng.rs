//! Deterministic random number generation.
//!
//! Every stochastic choice in this crate (dataset targets, weight
//! initialization) flows through [`SplitMix64`], the generator from Steele,
//! Lea and Flood, "Fast Splittable Pseudorandom Number Generators" (also the
//! seeding mixer of `java.util.SplittableRandom`). The algorithm is fixed
//! here in full so sequences are bit-identical across platforms and builds:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output = z ^ (z >> 31)
//! ```
//!
//! Floating-point mappings are equally pinned:
//! - uniform in `[0, 1)`: take the top 53 bits, `(u >> 11) as f64 * 2^-53`;
//! - standard normal: Box–Muller, `sqrt(-2 ln u1) * cos(2 pi u2)` with
//!   `u1 in (0, 1]`, consuming exactly two raw draws per sample and using
//!   `libm` so the transcendental functions do not depend on the platform's
//!   math library.

/// SplitMix64 generator with a fixed, documented algorithm.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

/// Stream tag for dataset generation (see [`SplitMix64::with_stream`]).
pub const STREAM_DATASET: u64 = 0x4441_5441; // "DATA"
/// Stream tag for parameter initialization.
pub const STREAM_INIT: u64 = 0x494e_4954; // "INIT"

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Seeds a generator for a named stream. Distinct tags give unrelated
    /// sequences for the same user-facing seed: the tag occupies the high
    /// 32 bits of the initial state.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        SplitMix64::new(seed ^ (stream << 32))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box–Muller; consumes two raw draws.
    pub fn normal(&mut self) -> f64 {
        // u1 in (0, 1] so the log argument is never zero.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * std::f64::consts::PI * u2)
    }
}
