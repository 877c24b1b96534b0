//! Deterministic sub-seed derivation.
//!
//! Every random draw in an experiment comes from a generator seeded by
//! `derive(master, path)`, where `path` names the draw site (generation,
//! individual, offspring, ...). Work items therefore never share a stream and
//! the result does not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed with a path of integers into a new 64-bit seed.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn rng(master: u64, path: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(master, path))
}

/// Stream tags keep unrelated draw sites apart.
pub mod stream {
    pub const LIQUID: u64 = 1;
    pub const READOUT: u64 = 2;
    pub const INPUT: u64 = 3;
    pub const MUTATION: u64 = 4;
    pub const FRESH: u64 = 5;
    pub const ENV: u64 = 6;
    pub const POLICY: u64 = 7;
    pub const INITIAL: u64 = 8;
    pub const UNEVOLVED: u64 = 9;
    pub const EVOLUTION: u64 = 10;
    pub const BASELINE: u64 = 11;
}
