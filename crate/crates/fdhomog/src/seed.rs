//! Deterministic seeding.
//!
//! Every random quantity in the crate flows through an explicit [`RngSeed`].
//! Derived seeds and per-item substreams make parallel execution reproducible:
//! the stream an item draws from depends only on the seed and the item index,
//! never on scheduling order.

use rand::SeedableRng;
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A 64-bit seed for reproducible randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Derive a new seed from this one and a tag, via splitmix64 chaining.
    ///
    /// Distinct tags give statistically independent seeds, so callers can
    /// fan one user-facing seed out to many internal consumers.
    pub fn derive(self, tag: u64) -> RngSeed {
        RngSeed(splitmix64(
            self.0 ^ splitmix64(tag.wrapping_add(0x9E37_79B9_7F4A_7C15)),
        ))
    }

    /// RNG for this seed (stream 0).
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// RNG on an independent substream of this seed.
    ///
    /// Substreams share the key but use distinct nonces, so any number of
    /// them can be consumed independently and in parallel.
    pub fn stream_rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Draw a standard normal deviate.
///
/// Thin wrapper so the distribution choice lives in one place.
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.sample(rand_distr::StandardNormal)
}

/// Draw a uniform index in `0..n`.
pub(crate) fn uniform_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    // rejection-free for our sizes; Rng::random_range is fine
    use rand::Rng;
    rng.random_range(0..n)
}

/// Exercise the RngCore path so substreams stay independent of rand's
/// distribution internals when only raw words are needed.
#[allow(dead_code)]
pub(crate) fn next_u64(rng: &mut ChaCha8Rng) -> u64 {
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_deterministic_and_tag_sensitive() {
        let s = RngSeed(42);
        assert_eq!(s.derive(1), s.derive(1));
        assert_ne!(s.derive(1), s.derive(2));
        assert_ne!(s.derive(1), RngSeed(43).derive(1));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = RngSeed(7);
        let a: Vec<u64> = {
            let mut r = s.stream_rng(0);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let a2: Vec<u64> = {
            let mut r = s.stream_rng(0);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = s.stream_rng(1);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }
}
