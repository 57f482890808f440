//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator derived from
//! one user seed, a named [`Stream`] and an index. The stream id selects an
//! independent ChaCha stream, and the index (tree number, trial number) is
//! mixed into the key with SplitMix64, so adding draws to one consumer never
//! shifts the numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Synthesize = 1,
    Folds = 2,
    Bootstrap = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(index));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream as u64);
    rng
}
