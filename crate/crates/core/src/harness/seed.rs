//! Reproducible per-path seeding.
//!
//! A path seed is `mix(master + (index + 1) * GOLDEN)`, where `mix` is the
//! SplitMix64 finalizer. Multiplication by the odd constant and the finalizer
//! are both bijections on `u64`, so distinct indices give distinct seeds for
//! a fixed master seed. The function is part of the output contract and must
//! not change between versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of path `index` from a master seed.
pub fn split_seed(master: u64, index: u64) -> u64 {
    mix(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Generator driving one path. Each path owns an independent ChaCha8 stream,
/// so generation order across workers does not matter.
pub fn path_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
