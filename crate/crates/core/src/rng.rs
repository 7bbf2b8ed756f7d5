//! Seeded randomness shared by every stochastic step.
//!
//! All draws come from ChaCha8 (RFC 7539 block function, 8 rounds) keyed by
//! `seed_from_u64(seed)` and, where work is split into batches, switched to
//! stream `batch_index` with `set_stream`. Bounded integers use plain
//! rejection sampling on `next_u64`, so a given (seed, stream) yields the
//! same values on every platform and independently of the `rand`
//! distribution implementations.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for batch `stream` of a run keyed by `seed`.
pub fn seeded_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform integer in `0..bound`. Panics if `bound == 0`.
pub fn below(rng: &mut impl RngCore, bound: u64) -> u64 {
    assert!(bound > 0, "empty range");
    // Largest multiple of `bound` that fits; values at or above it are redrawn.
    let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return v % bound;
        }
    }
}

/// Uniform float in `[0, 1)` with 53 random bits.
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal deviate by the Box-Muller transform.
pub fn normal(rng: &mut impl RngCore) -> f64 {
    loop {
        let u1 = unit(rng);
        if u1 > 0.0 {
            let u2 = unit(rng);
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Fisher-Yates shuffle driven by [`below`].
pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
