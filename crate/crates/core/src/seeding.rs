//! Deterministic substream derivation.
//!
//! Every random stream in a run (per node, per link, per replication) is a
//! `ChaCha8Rng` seeded from the scenario seed and a tuple of identifiers, so
//! draws never depend on event interleaving.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_NODE: u64 = 0x6e6f_6465;
pub(crate) const TAG_LINK: u64 = 0x6c69_6e6b;
pub(crate) const TAG_REPLICATION: u64 = 0x7265_706c;
pub(crate) const TAG_GA: u64 = 0x6761_6761;
pub(crate) const TAG_MAC: u64 = 0x6d61_6321;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `seed` with `parts` into a new 64-bit seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

/// Seed of replication `index` of a run seeded with `seed`.
pub fn replication_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, &[TAG_REPLICATION, index])
}
