//! Seeded randomness. Every stream derives from a 64-bit seed, and
//! independent substreams are split off by index so that batch results do
//! not depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout.
pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Generator for substream `index` of `seed`.
pub fn split(seed: u64, index: u64) -> Rng {
    Rng::seed_from_u64(mix64(seed ^ mix64(index.wrapping_add(1))))
}
