//! Seed derivation and the fixed simulation generator.
//!
//! Every replication draws from its own `ChaCha8Rng`, seeded through
//! `seed_from_u64` with `replication_seed(base, i)`. The derivation depends
//! only on `(base, i)`, so replication `i` produces the same stream whatever
//! the total number of replications.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used by every simulator.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(base + (i + 1) * golden_gamma)`, the `i`-th output of a
/// SplitMix64 sequence started at `base`.
pub fn replication_seed(base: u64, i: u64) -> u64 {
    splitmix64(base.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn replication_rng(base: u64, i: u64) -> SimRng {
    SimRng::seed_from_u64(replication_seed(base, i))
}
