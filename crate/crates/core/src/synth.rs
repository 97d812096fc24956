//! Planted-mode synthetic data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{CategoricalDataset, DataPoint, MAX_CARDINALITY};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub k_true: usize,
    pub n: usize,
    pub m: usize,
    pub cardinality: usize,
    pub flip_prob: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub dataset: CategoricalDataset,
    pub planted_modes: Vec<DataPoint>,
    /// Planted mode index of each row.
    pub labels: Vec<usize>,
}

/// Draws `k_true` uniform modes, gives row `i` mode `i % k_true`, then
/// flips each cell independently with `flip_prob` to a uniformly chosen
/// different category.
pub fn synth_generate(p: &SynthParams) -> Result<SynthData> {
    if p.k_true == 0 || p.n == 0 || p.m == 0 {
        return Err(Error::InvalidConfig(
            "k_true, n and m must be at least 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&p.flip_prob) {
        return Err(Error::InvalidConfig(format!(
            "flip probability {} outside [0, 1)",
            p.flip_prob
        )));
    }
    if p.cardinality == 0 || p.cardinality > MAX_CARDINALITY {
        return Err(Error::InvalidConfig(format!(
            "cardinality {} outside 1..={MAX_CARDINALITY}",
            p.cardinality
        )));
    }
    if p.cardinality < 2 && p.flip_prob > 0.0 {
        return Err(Error::InvalidConfig(
            "flipping needs at least two categories".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let card = p.cardinality as u16;
    let planted: Vec<Vec<u8>> = (0..p.k_true)
        .map(|_| (0..p.m).map(|_| rng.gen_range(0..card) as u8).collect())
        .collect();
    let mut codes = Vec::with_capacity(p.n * p.m);
    let mut labels = Vec::with_capacity(p.n);
    for i in 0..p.n {
        let label = i % p.k_true;
        labels.push(label);
        for &v in &planted[label] {
            let cell = if p.flip_prob > 0.0 && rng.gen_bool(p.flip_prob) {
                // uniform over the other card - 1 categories
                let r = rng.gen_range(0..card - 1) as u8;
                if r >= v {
                    r + 1
                } else {
                    r
                }
            } else {
                v
            };
            codes.push(cell);
        }
    }
    let dataset = CategoricalDataset::new(
        codes,
        vec![p.cardinality; p.m],
        (0..p.m).map(|a| format!("a{a}")).collect(),
    )?;
    Ok(SynthData {
        dataset,
        planted_modes: planted.into_iter().map(DataPoint::new).collect(),
        labels,
    })
}
