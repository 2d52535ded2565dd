//! Deterministic seed derivation.
//!
//! Every source of randomness in an experiment (instance generation,
//! optimizer restarts, sampling) draws from its own RNG stream derived from a
//! single master seed and a textual stream label, so one number reproduces a
//! whole experiment. Derivation is a fixed FNV-1a hash of the label mixed
//! into the master seed with splitmix64 steps; it does not depend on
//! platform or library hash seeds.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a sub-seed for the stream named `label` from `master`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    splitmix64(splitmix64(master) ^ fnv1a(label.as_bytes()))
}

/// Seeded RNG for the stream named `label`.
pub fn stream_rng(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label))
}
