//! Seeded random streams.
//!
//! Every stochastic component draws from a [`SimRng`] derived from a run seed
//! and a named stream, so runs are reproducible and independent components do
//! not share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SimRng = ChaCha8Rng;

/// Stream identifiers used across the crate.
pub mod streams {
    pub const TRAJECTORY: u64 = 1;
    pub const INIT: u64 = 2;
    pub const BATCH: u64 = 3;
    pub const DUAL_INIT: u64 = 4;
    pub const ACTING: u64 = 5;
    pub const MODEL: u64 = 6;
    pub const PROBE: u64 = 7;
    pub const RESAMPLE: u64 = 8;
}

pub fn seeded(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal draw (ziggurat, via `rand_distr`).
#[inline]
pub fn standard_normal(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}
