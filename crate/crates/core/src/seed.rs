//! Deterministic child-seed derivation.
//!
//! Every stochastic stage derives its own seed as
//! `derive(master, stage, entity)` so that stages and entities get
//! independent, reproducible streams regardless of execution order. The
//! scheme is FNV-1a over the master seed bytes and the labels, finished
//! with two splitmix64 rounds, and is stable across versions and platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Child seed for `(stage, entity)` under `master`.
pub fn derive(master: u64, stage: &str, entity: &str) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    h = fnv1a(h, stage.as_bytes());
    h = fnv1a(h, &[0]);
    h = fnv1a(h, entity.as_bytes());
    splitmix64(splitmix64(h))
}

/// Child seed for an indexed entity, e.g. a pool number or a repetition.
pub fn derive_indexed(master: u64, stage: &str, entity: &str, index: u64) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    h = fnv1a(h, stage.as_bytes());
    h = fnv1a(h, &[0]);
    h = fnv1a(h, entity.as_bytes());
    h = fnv1a(h, &[0]);
    h = fnv1a(h, &index.to_le_bytes());
    splitmix64(splitmix64(h))
}

/// The reference generator used throughout: ChaCha8 seeded from a derived
/// 64-bit seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
