//! Deterministic seed derivation. Every random stream in the crate is a
//! ChaCha8 generator keyed by a seed derived from a base seed plus a tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer applied to `base ⊕ tag·φ`.
pub fn derive(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for a tagged sub-task of `base`.
pub fn stream(base: u64, tag: u64) -> ChaCha8Rng {
    rng(derive(base, tag))
}
