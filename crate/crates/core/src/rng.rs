//! Deterministic random streams.
//!
//! Every randomized routine takes an explicit `&mut impl Rng`. Streams are
//! ChaCha20 seeded from a `u64`, which is reproducible across platforms.
//! Parallel workers derive their own seeds with [`split_seed`].

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha20Rng;

pub fn make_rng(seed: u64) -> Stream {
    ChaCha20Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `(seed, index)`.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Draws an index with probability proportional to `weights`.
///
/// Panics if the weights are all zero or contain a negative entry.
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(weights)
        .expect("categorical weights must be nonnegative with positive total")
        .sample(rng)
}

/// A uniformly random subset of `{0, .., n-1}` of size `m`, sorted.
pub fn subset<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut picked = rand::seq::index::sample(rng, n, m).into_vec();
    picked.sort_unstable();
    picked
}
