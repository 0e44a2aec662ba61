//! Seeded, reproducible random streams.
//!
//! Every random choice in a run derives from one 64-bit seed. Separate
//! consumers (a hypermatching for block `t`, the noise for block `t`, ...)
//! draw from separate ChaCha streams so that adding or reordering one
//! consumer never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Hidden = 1,
    Matching = 2,
    Noise = 3,
    UniformSignal = 4,
    Trial = 5,
    Auxiliary = 6,
}

pub fn substream(seed: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << 8) | purpose as u64);
    rng
}

/// Derive a child seed, e.g. one per Monte-Carlo trial.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
