//! Seeded random number generation.
//!
//! Every stochastic routine draws from a ChaCha8 stream seeded with a `u64`.
//! Streams are reproducible within one build of this crate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for the `index`-th independent sub-stream of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index)
}
