//! Pinned random-number generation.
//!
//! Everything that consumes randomness in this crate derives it from a
//! 64-bit seed through the helpers here, so archived runs reproduce
//! bit-for-bit. The stream algorithm is ChaCha8 (`rand_chacha`), keyed by
//! expanding the 64-bit seed with SplitMix64. Independent substreams
//! (per instance, per grid cell, per start) are derived by mixing the
//! parent seed with a stream index before keying.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The pinned stream algorithm name, echoed into run manifests.
pub const RNG_ALGORITHM: &str = "chacha8-splitmix64";

/// SplitMix64 finalizer. Used both to expand seeds into ChaCha keys and to
/// derive substream seeds from (seed, index) pairs.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// RNG for the root stream of a seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for substream `index` of `seed`. Substreams for distinct indices are
/// statistically independent and unaffected by draws from other substreams.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index.wrapping_add(1))))
}

/// Second-level substream, e.g. (instance, start) pairs.
pub fn substream2(seed: u64, index0: u64, index1: u64) -> ChaCha8Rng {
    let s = splitmix64(seed ^ splitmix64(index0.wrapping_add(1)));
    substream(s, index1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn substreams_are_independent_of_sibling_draws() {
        let mut a = substream(42, 3);
        let first = a.next_u64();
        // draw from an unrelated substream, then re-derive
        let mut b = substream(42, 7);
        b.next_u64();
        let mut a2 = substream(42, 3);
        assert_eq!(first, a2.next_u64());
    }

    #[test]
    fn distinct_indices_give_distinct_streams() {
        let mut a = substream(1, 0);
        let mut b = substream(1, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
