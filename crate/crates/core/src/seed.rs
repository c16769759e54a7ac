//! Seeding contract.
//!
//! Every random stream is a ChaCha8 generator seeded from a 64-bit value.
//! Child seeds are derived from `(master, label, index)` with a stable mix so
//! that any replicate of any suite can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomSeed = u64;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: RandomSeed) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// splitmix64 finalizer
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives the seed of replicate `index` of the stream named `label`.
pub fn derive_seed(master: RandomSeed, label: &str, index: u64) -> RandomSeed {
    mix(mix(master ^ fnv1a(label)).wrapping_add(index))
}
