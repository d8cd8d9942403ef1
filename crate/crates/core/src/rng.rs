//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(seed, purpose, index)`. ChaCha is counter based, so a stream can be
//! opened directly at any index without generating its predecessors, and
//! parallel workers that handle disjoint indices produce the same numbers
//! no matter how the work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent purposes get independent key spaces, so e.g. resampling
/// fading powers never perturbs the deployment geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Geometry = 1,
    Blockage = 2,
    Gain = 3,
    Fading = 4,
    Distances = 5,
    Sweep = 6,
    Oracle = 7,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Opens the stream for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> SimRng {
    let key = mix64(seed ^ mix64(purpose as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Derives a child seed from a parent seed and a path of labels.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(seed), |acc, &label| mix64(acc ^ mix64(label.wrapping_add(0xD134_2543_DE82_EF95))))
}
