//! Named, reproducible random sub-streams derived from one root seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Mixes a seed with a sequence of integers. Stable across platforms.
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for p in parts {
        h = splitmix64(h ^ splitmix64(*p));
    }
    h
}

/// A root seed from which independent named streams are split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    root: u64,
}

impl Streams {
    pub fn new(root: u64) -> Self {
        Streams { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn seed(&self, name: &str) -> u64 {
        mix(self.root, &[fnv1a(name.as_bytes())])
    }

    pub fn indexed_seed(&self, name: &str, index: u64) -> u64 {
        mix(self.root, &[fnv1a(name.as_bytes()), index])
    }

    pub fn stream(&self, name: &str) -> StreamRng {
        StreamRng::seed_from_u64(self.seed(name))
    }

    pub fn indexed(&self, name: &str, index: u64) -> StreamRng {
        StreamRng::seed_from_u64(self.indexed_seed(name, index))
    }

    /// A child root, for handing a whole namespace to a sub-component.
    pub fn child(&self, name: &str, index: u64) -> Streams {
        Streams::new(self.indexed_seed(name, index))
    }
}

/// Draws an index from a probability vector. Entries need not be normalised.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    // Rounding can leave u marginally above the last mass.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// A uniform draw in [0, 1) determined entirely by a hashed key.
pub fn hashed_unit(seed: u64, parts: &[u64]) -> f64 {
    (mix(seed, parts) >> 11) as f64 / (1u64 << 53) as f64
}
