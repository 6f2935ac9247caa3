//! Deterministic random streams.
//!
//! Every stochastic step draws from its own ChaCha8 stream whose seed is derived
//! from the run seed and a key path such as `["forest", "tree", "17"]`. Results
//! therefore do not depend on the order in which independent work items are
//! scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a key path.
pub fn derive_seed<S: AsRef<str>>(seed: u64, keys: &[S]) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    feed(&seed.to_le_bytes());
    for key in keys {
        let key = key.as_ref().as_bytes();
        // length prefix keeps ["ab", "c"] and ["a", "bc"] apart
        feed(&(key.len() as u64).to_le_bytes());
        feed(key);
    }
    splitmix64(h)
}

pub fn seeded(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

pub fn stream<S: AsRef<str>>(seed: u64, keys: &[S]) -> Stream {
    seeded(derive_seed(seed, keys))
}
