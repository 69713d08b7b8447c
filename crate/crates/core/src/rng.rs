//! Deterministic counter-based RNG derivation.
//!
//! Every random decision in the crate is drawn from a [`RngStream`] derived
//! from a `(global seed, sample index, stage index)` path. Streams for
//! different paths are statistically independent, and deriving a stream
//! never advances any other stream, so work can be scheduled across threads
//! in any order without changing results. Inserting a stage does not
//! perturb the draws of earlier stages.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The concrete generator used everywhere; portable and seedable.
pub type RngStream = ChaCha8Rng;

/// SplitMix64 finalizer, used to decorrelate structured counter inputs.
#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with up to two counters into a single well-spread u64.
#[inline]
fn mix(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b.rotate_left(17))
}

/// Derives the RNG stream for one pipeline stage of one sample.
pub fn stage_stream(global_seed: u64, sample_index: u64, stage_index: u64) -> RngStream {
    ChaCha8Rng::seed_from_u64(mix(global_seed, sample_index, stage_index))
}

/// Derives a free-standing stream from a seed and a single counter.
pub fn derived_stream(seed: u64, counter: u64) -> RngStream {
    ChaCha8Rng::seed_from_u64(mix(seed, counter, 0))
}

/// Derives the RNG stream for one (bin, pair) cell of a curve evaluation.
pub fn cell_stream(seed: u64, bin: u64, pair: u64) -> RngStream {
    ChaCha8Rng::seed_from_u64(mix(seed, bin, pair))
}
