//! Seed derivation for named random streams.
//!
//! Every random quantity in a run is drawn from its own ChaCha stream whose seed
//! is a pure function of the master seed, a stream tag and an index. Work can
//! therefore be split across threads in any way without changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags. Distinct tags never share a seed for the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Batch = 1,
    Directions = 2,
    Index = 3,
    Repetition = 4,
    Trajectory = 5,
    Oracle = 6,
    Sweep = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of stream `tag`, element `index`, under `parent`.
pub fn derive_seed(parent: u64, tag: Stream, index: u64) -> u64 {
    let a = splitmix64(parent ^ (tag as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(a ^ splitmix64(index))
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_stream(parent: u64, tag: Stream, index: u64) -> StreamRng {
    stream(derive_seed(parent, tag, index))
}
