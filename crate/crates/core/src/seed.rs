//! Seed derivation for reproducible runs.
//!
//! Every random draw in a sweep is keyed by `(global seed, combination index,
//! repeat index, image index)` through a chain of SplitMix64 finalizers, so a
//! single run can be replayed without replaying anything before it. The
//! derived 64-bit seed initializes a ChaCha8 stream.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

/// Written into manifests so third parties can re-derive every seed.
pub const SEED_SCHEME: &str = "splitmix64-chain/v1: sm(x)=splitmix64 finalizer of x+0x9E3779B97F4A7C15; \
run=sm(sm(sm(global)^combination)^repeat); image=sm(run^image_index); \
noise=ChaCha8Rng::seed_from_u64(image) (rand_core 0.9), StandardNormal (rand_distr 0.5), row-major interleaved draws";

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_seed(global_seed: u64, combination: u64, repeat: u32) -> u64 {
    splitmix64(splitmix64(splitmix64(global_seed) ^ combination) ^ u64::from(repeat))
}

pub fn image_seed(run_seed: u64, image_index: u64) -> u64 {
    splitmix64(run_seed ^ image_index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// FNV-1a, used to turn string keys into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
