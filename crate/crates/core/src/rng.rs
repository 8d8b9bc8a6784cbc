//! Seeded randomness.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded through
//! `seed_from_u64`, and Gaussian variates come from `rand_distr`'s
//! `StandardNormal`. ChaCha8 output is specified independently of platform
//! and word size, so seeded datasets, traces and trained networks are
//! reproducible across machines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for sub-stream `stream` (chain index, pair index, ...),
/// mixed with the SplitMix64 finalizer.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
