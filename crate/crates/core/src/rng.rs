//! Deterministic, splittable random streams.
//!
//! A [`SeedNode`] is a position in a seed tree. Children are derived by
//! hashing a label into the parent key, so a stream depends only on its path
//! from the master seed and never on how many siblings exist or which thread
//! consumes it.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator used for every stream.
pub type StreamRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash_label(label: &str) -> u64 {
    // FNV-1a, then mixed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(h)
}

/// A node of the seed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedNode {
    key: u64,
}

impl SeedNode {
    pub fn root(master_seed: u64) -> Self {
        Self {
            key: splitmix64(master_seed),
        }
    }

    /// Child stream addressed by an integer (replica, generation, sample index).
    #[inline]
    pub fn child(self, index: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(index.wrapping_add(GOLDEN))),
        }
    }

    /// Child stream addressed by a purpose label.
    pub fn named(self, label: &str) -> Self {
        Self {
            key: splitmix64(self.key.rotate_left(17) ^ hash_label(label)),
        }
    }

    #[inline]
    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.key)
    }

    pub fn key(self) -> u64 {
        self.key
    }
}
