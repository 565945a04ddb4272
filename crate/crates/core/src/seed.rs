//! Sub-seed derivation. Every random stream in the crate is keyed off a root
//! seed plus a path of integers, so results never depend on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers used when deriving sub-seeds.
pub mod stream {
    pub const CHIP_FACTOR: u64 = 0x01;
    pub const LOC_FACTOR: u64 = 0x02;
    pub const NOISE: u64 = 0x03;
    pub const LOCATIONS: u64 = 0x04;
    pub const CHIP_SEED: u64 = 0x05;
    pub const SPLIT: u64 = 0x06;
    pub const FOLDS: u64 = 0x07;
    pub const NCA_SUBSAMPLE: u64 = 0x08;
    pub const STATS: u64 = 0x09;
    pub const USED_SPOTS: u64 = 0x0a;
}

#[inline]
fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 64-bit sub-seed from `root` and an ordered path of keys.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    let mut h = mix(root ^ 0x9e37_79b9_7f4a_7c15);
    for &p in path {
        h = mix(h ^ mix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

pub fn rng(root: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, path))
}
