//! Fixed problem instances shared by the benchmarks.

use nalgebra::DMatrix;
use sgl_core::synth::{synthesize, GenConfig};

/// Observed covariance of a seeded synthetic instance with `n` nodes,
/// `hidden` of them unobserved.
pub fn observed_covariance(n: usize, hidden: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let cfg = GenConfig {
        n,
        k,
        seed,
        ..GenConfig::default()
    };
    synthesize(&cfg, hidden)
        .expect("benchmark instance")
        .observed
        .covariance
}
