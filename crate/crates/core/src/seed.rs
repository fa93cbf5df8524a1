// SPDX-License-Identifier: MIT OR Apache-2.0

//! Derivation of independent RNG streams from one 64-bit seed.

use rand::SeedableRng;

/// Mix `seed` with a purpose label so that, e.g., the split and the
/// initialization drawn from the same seed are unrelated streams.
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng_for<R: SeedableRng>(seed: u64, purpose: &str) -> R {
    R::seed_from_u64(derive_seed(seed, purpose))
}
