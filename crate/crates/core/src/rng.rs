//! Seed derivation for reproducible, independent per-trial streams.
//!
//! Every trial owns a private [`TrialRng`] whose seed is a pure function of
//! `(master_seed, cell, trial)`. Trials can therefore run in any order, on any
//! number of threads, and still replay bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every sample stream.
pub type TrialRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of trial `trial` in experiment cell `cell`.
pub fn trial_seed(master_seed: u64, cell: u64, trial: u64) -> u64 {
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ cell.rotate_left(17));
    splitmix64(b ^ trial.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Builds the generator for a derived seed.
pub fn trial_rng(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit FNV-1a hash, used to turn cell labels into seed material.
pub fn stable_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
