//! Seed derivation for keyed random streams.
//!
//! Every random quantity in the simulator is drawn from a stream whose seed is
//! a pure function of a tuple of integers (run seed, iteration, frame,
//! receiver, ...). Work can then be scheduled in any order without changing
//! results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a tuple of integers into one 64-bit key.
pub fn key(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5851_f42d_4c95_7f2d, |acc, &p| mix64(acc ^ mix64(p)))
}

/// A ChaCha stream seeded from a key tuple.
pub fn stream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key(parts))
}

/// Uniform in (0, 1] with 53 bits of resolution, derived from a hash value.
#[inline]
pub fn unit_open0(h: u64) -> f64 {
    ((h >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in [0, 1) with 53 bits of resolution, derived from a hash value.
#[inline]
pub fn unit_closed0(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_depend_on_order_and_value() {
        assert_ne!(key(&[1, 2]), key(&[2, 1]));
        assert_ne!(key(&[1, 2]), key(&[1, 3]));
        assert_eq!(key(&[7, 8, 9]), key(&[7, 8, 9]));
    }

    #[test]
    fn unit_ranges() {
        assert!(unit_open0(0) > 0.0);
        assert!(unit_open0(u64::MAX) <= 1.0);
        assert_eq!(unit_closed0(0), 0.0);
        assert!(unit_closed0(u64::MAX) < 1.0);
    }
}
