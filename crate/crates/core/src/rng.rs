//! Counter-derived random streams.
//!
//! Every random quantity is drawn from a stream addressed by
//! `(seed, key, index)`, so results do not depend on how work is scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `key` (a replicate number, a purpose tag, ...).
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    mix(mix(seed) ^ mix(key.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// Independent stream `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

// Purpose tags, kept distinct so that e.g. the stage split never reuses the
// genotype streams.
pub(crate) const TAG_COHORT: u64 = 1;
pub(crate) const TAG_SPLIT: u64 = 2;
pub(crate) const TAG_DRAWS: u64 = 3;
pub(crate) const TAG_PERMUTE: u64 = 4;
pub(crate) const TAG_SUBSAMPLE: u64 = 5;
pub(crate) const TAG_REPLICATE: u64 = 6;
pub(crate) const TAG_RISK_INDEX: u64 = 7;
pub(crate) const TAG_SUBSTUDY: u64 = 8;
