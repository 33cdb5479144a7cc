//! Seeding and random streams.
//!
//! Every random quantity in the crate is drawn from ChaCha8 (`rand_chacha`),
//! a counter-based stream cipher generator. A generator is keyed by a 64-bit
//! seed and, where a family of independent streams is needed (one per
//! measurement tensor), by the ChaCha stream id. Draws for stream `k` never
//! depend on how many other streams were consumed, so materialized and
//! on-demand generation agree bit for bit.
//!
//! Composite seeds (per cell, per trial, per probe sample) are derived with
//! the SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a base seed together with a path of indices into a new seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut h = mix64(base.wrapping_add(GOLDEN_GAMMA));
    for (depth, &p) in path.iter().enumerate() {
        let salt = GOLDEN_GAMMA.wrapping_mul(depth as u64 + 2);
        h = mix64(h ^ mix64(p.wrapping_add(salt)));
    }
    h
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` of the family keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn fill_standard_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}
