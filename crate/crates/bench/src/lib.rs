//! Shared fixtures for the benchmarks.

use maxload_core::keysets::{KeySetSpec, KeySetVariant};

/// `n` uniform keys from `[universe]` with a fixed seed.
pub fn uniform_keys(n: u64, universe: u64) -> Vec<u64> {
    KeySetSpec::new(KeySetVariant::UniformRandom { n, seed: 0xbe9c }, universe)
        .generate()
        .expect("fixture fits its universe")
}
