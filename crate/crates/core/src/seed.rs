//! Deterministic seed derivation.
//!
//! Every random stream in a batch is seeded from `(base seed, tags...)`, so
//! any single run can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random generator used everywhere in the crate.
pub type SimRng = ChaCha8Rng;

/// Stream tags keep the independent random sources of one run apart.
pub mod stream {
    pub const TARGET: u64 = 0x7461_7267;
    pub const PREPARATION: u64 = 0x7072_6570;
    pub const ENGINE: u64 = 0x656e_6769;
    pub const ORACLE: u64 = 0x6f72_6163;
    pub const TOMOGRAM: u64 = 0x746f_6d6f;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `base` with an ordered list of tags into a new 64-bit seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &tag| {
            splitmix64(acc.rotate_left(23) ^ splitmix64(tag))
        })
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
