//! Seed derivation for named random sub-streams.
//!
//! Every randomized stage (sampling, workload, forwarding draws, preference
//! lists) pulls from its own stream derived from the master seed, so adding
//! or removing one consumer never perturbs the draws of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a child seed from `(master, index, label)`.
///
/// Stable across platforms and releases: FNV-1a over the label, golden-ratio
/// mixing of the index, one splitmix64 finalization round.
pub fn sub_seed(master: u64, index: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// A seeded ChaCha stream for `(master, index, label)`.
pub fn stream(master: u64, index: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, index, label))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
