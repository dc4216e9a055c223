//! Seeded random streams. Every stochastic routine takes an explicit seed and
//! derives its generator here so results are portable across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a (seed, label, index) triple.
pub fn derived(seed: u64, label: &str, index: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(derived_seed(seed, label, index))
}

/// Derives an independent 64-bit seed for a (seed, label, index) triple.
pub fn derived_seed(seed: u64, label: &str, index: u64) -> u64 {
    // FNV-1a over the label, then mix with splitmix64.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut x = seed ^ h.rotate_left(17) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
