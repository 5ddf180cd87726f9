//! Seeded random streams.
//!
//! Every stochastic routine takes a 64-bit seed and draws from a ChaCha8
//! stream, so results are reproducible across platforms and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of item `index` in a family keyed by `base`:
/// `mix64(base XOR (index * golden_gamma))`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ index.wrapping_mul(GOLDEN_GAMMA))
}

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
