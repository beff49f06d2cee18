//! Splittable random streams.
//!
//! A [`Stream`] is a 64-bit key derived from a root seed by a chain of
//! `child(index)` and `named(tag)` steps. Each key seeds a ChaCha8 keystream,
//! so the numbers drawn for split `b` depend only on `(seed, b)` and never on
//! which worker thread ran the split or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream {
            key: mix64(seed ^ GOLDEN),
        }
    }

    pub fn child(self, index: u64) -> Self {
        Stream {
            key: mix64(self.key ^ mix64(index.wrapping_add(GOLDEN))),
        }
    }

    pub fn named(self, tag: &str) -> Self {
        Stream {
            key: mix64(self.key.rotate_left(17) ^ mix64(fnv1a(tag.as_bytes()))),
        }
    }

    pub fn key(self) -> u64 {
        self.key
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        for (w, chunk) in seed.chunks_exact_mut(8).enumerate() {
            let word = mix64(self.key.wrapping_add((w as u64 + 1).wrapping_mul(GOLDEN)));
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
