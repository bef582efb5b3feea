//! Seeding scheme.
//!
//! Every random decision in the pipeline draws from a `ChaCha8Rng`
//! (`rand_chacha` 0.3) created with `SeedableRng::seed_from_u64`. The run
//! seed is never fed to a generator directly; each stage derives its own
//! sub-seed with [`derive_seed`], which applies the SplitMix64 finalizer to
//! `seed ^ (stage * 0x9E3779B97F4A7C15)`. Shuffles are Fisher-Yates from the
//! last index downwards, drawing `j` uniformly in `0..=i` with
//! `Rng::gen_range`, which is what `SliceRandom::shuffle` does in rand 0.8.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage identifiers for [`derive_seed`].
pub mod stage {
    pub const SUBSAMPLE: u64 = 1;
    pub const TRAIN_TEST: u64 = 2;
    pub const COBRA_SPLIT: u64 = 3;
    pub const FOLDS: u64 = 4;
    pub const RANDOM_SEARCH: u64 = 5;
    pub const TUNING_SPLIT: u64 = 6;
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stage: u64) -> u64 {
    splitmix64(seed ^ stage.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly shuffled `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    idx
}
