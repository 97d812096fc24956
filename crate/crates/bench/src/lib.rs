//! Fixtures shared by the criterion benchmarks.

use bkmodes_core::{synth_generate, CategoricalDataset, SynthParams};

/// Planted-mode data with 8 true clusters over 32 four-valued attributes.
pub fn planted(n: usize, seed: u64) -> CategoricalDataset {
    synth_generate(&SynthParams {
        k_true: 8,
        n,
        m: 32,
        cardinality: 4,
        flip_prob: 0.2,
        seed,
    })
    .expect("valid synthetic parameters")
    .dataset
}
