//! Seeded random streams.
//!
//! Every random draw in the library comes from a [`ChaCha8Rng`] whose seed is
//! derived from a master seed and a list of integer tags, so independent
//! consumers (individual `k` at epoch `e`, dataset generation, ...) never share
//! a stream and results do not depend on evaluation order.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Stream purposes, mixed into the seed derivation.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const MINIBATCH: u64 = 2;
    pub const EA: u64 = 3;
    pub const DATASET: u64 = 4;
    pub const EVAL_BATCH: u64 = 5;
    pub const DISC_INIT: u64 = 6;
    pub const FUSION: u64 = 7;
    pub const PROBLEM: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a 64-bit seed from `master` and `tags`.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}
