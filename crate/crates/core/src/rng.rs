//! Deterministic seed derivation and seeded draws. Every random quantity in
//! the toolkit flows from an explicit u64 seed through these helpers, so a
//! corpus-level seed splits into independent per-utterance and per-purpose
//! streams whose outputs do not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream tags: each independent consumer of a seed mixes in its own tag.
pub mod tags {
    pub const ACOUSTIC_MODEL: u64 = 0x41435355; // corpus -> generation-time model seed
    pub const MISMATCHED_MODEL: u64 = 0x4d49534d;
    pub const UTTERANCE: u64 = 0x55545453;
    pub const REFERENCE: u64 = 0x52454653;
    pub const CTC_FRAMES: u64 = 0x43544346;
    pub const ENC_EMBED: u64 = 0x454e4345;
    pub const ATT_STEP: u64 = 0x41545354;
    pub const TOKEN_EMBED: u64 = 0x544f4b45;
    pub const DEC_PROJ: u64 = 0x44454350;
    pub const RNNLM: u64 = 0x524e4e4c;
    pub const SPLIT: u64 = 0x53504c54;
    pub const EPOCH: u64 = 0x45504f43;
    pub const INIT: u64 = 0x494e4954;
}

/// splitmix64 finalizer; the workhorse for deriving child seeds.
#[inline]
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub fn mix3(a: u64, b: u64, c: u64) -> u64 {
    mix(mix(a, b), c)
}

/// FNV-1a over a token-id sequence; used to condition noise on prefix content.
pub fn hash_tokens(tokens: &[u32]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &t in tokens {
        for byte in t.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// FNV-1a over the bit patterns of a float vector.
pub fn hash_floats(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &v in values {
        for byte in v.to_bits().to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// n standard-normal draws scaled by sigma, from a fresh stream.
pub fn gaussian_vec(seed: u64, n: usize, sigma: f64) -> Vec<f64> {
    let mut rng = chacha(seed);
    (0..n)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * sigma
        })
        .collect()
}

/// rows x cols matrix with entries uniform in ±sqrt(6/(fan_in+fan_out)),
/// row-major, from a fresh stream.
pub fn glorot_uniform(seed: u64, rows: usize, cols: usize) -> Vec<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let mut rng = chacha(seed);
    (0..rows * cols)
        .map(|_| rng.gen_range(-bound..bound))
        .collect()
}
