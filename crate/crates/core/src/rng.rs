//! Deterministic seeding.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded from a mix of
//! the user seed and a stream tag, so runs are reproducible without storing
//! permutations or masks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in run metadata.
pub const PRNG_NAME: &str = "ChaCha8Rng";

/// Default seed used by every randomized command when none is given.
pub const DEFAULT_SEED: u64 = 98765;

pub(crate) const STREAM_SHUFFLE: u64 = 0x5348_5546;
pub(crate) const STREAM_DROPOUT: u64 = 0x4452_4f50;
pub(crate) const STREAM_SPLIT: u64 = 0x5350_4c54;
pub(crate) const STREAM_INIT: u64 = 0x494e_4954;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `(seed, stream, index)` into a single 64-bit seed.
pub fn mix_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn stream(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream, index))
}
