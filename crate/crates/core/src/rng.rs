//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 256-bit seed derived from
//! `(master, tag, index)`:
//!
//! 1. `h = fnv1a64(tag)`
//! 2. `k = splitmix64(master ^ splitmix64(h ^ splitmix64(index)))`
//! 3. the seed bytes are four successive `splitmix64` outputs of a counter
//!    starting at `k`, each written little-endian.
//!
//! Streams with different tags or indices are independent of one another and
//! of the order in which they are created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// 64-bit key for the sub-stream `(master, tag, index)`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a64(tag.as_bytes()) ^ splitmix64(index)))
}

/// Opens the sub-stream `(master, tag, index)`.
pub fn stream(master: u64, tag: &str, index: u64) -> StreamRng {
    let key = derive_seed(master, tag, index);
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        let word = splitmix64(key.wrapping_add((i as u64).wrapping_mul(GOLDEN)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
