//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`stream`], so a single user
//! seed fans out into independent, reproducible streams (initialization,
//! shuffling, probing, random scores) that never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const INIT: u64 = 1;
pub(crate) const SHUFFLE: u64 = 2;
pub(crate) const PROBE: u64 = 3;
pub(crate) const RANDOM_SCORES: u64 = 4;
pub(crate) const SYNTHETIC: u64 = 5;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
