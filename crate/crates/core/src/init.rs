//! Initial-center strategies.
//!
//! * `random`: K distinct rows sampled without replacement (seeded ChaCha8).
//! * `farthest_point`: highest attribute-frequency row, then repeatedly the
//!   row maximizing its minimum distance to the chosen centers.
//! * `cao`: highest-density row, then repeatedly the row maximizing
//!   `min over chosen centers c of d(x, c) * Dens(x)`.
//! * `bkmodes`: bisecting K-Modes. Start from one cluster holding every row
//!   and repeatedly split the cluster with the largest within-cluster
//!   distance sum using a two-center K-Modes seeded with its mode and the
//!   row farthest from that mode.
//!
//! Every argmax breaks ties toward the lowest row index (or list position).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::dataset::{CategoricalDataset, DataPoint, RowSubset};
use crate::engine::{lloyd, EngineConfig, Rows};
use crate::error::{Error, Result};
use crate::metric::{hamming_unchecked, mode_of, FrequencyTable};

/// Initializer family, without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Random,
    Farthest,
    Cao,
    Bkmodes,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [
        MethodKind::Random,
        MethodKind::Farthest,
        MethodKind::Cao,
        MethodKind::Bkmodes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Random => "random",
            MethodKind::Farthest => "farthest",
            MethodKind::Cao => "cao",
            MethodKind::Bkmodes => "bkmodes",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// A concrete initializer. Only `Random` carries a seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMethod {
    Random { seed: u64 },
    FarthestPoint,
    Cao,
    BkModes,
}

impl InitMethod {
    pub fn kind(&self) -> MethodKind {
        match self {
            InitMethod::Random { .. } => MethodKind::Random,
            InitMethod::FarthestPoint => MethodKind::Farthest,
            InitMethod::Cao => MethodKind::Cao,
            InitMethod::BkModes => MethodKind::Bkmodes,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InitMethod::Random { seed } => Some(*seed),
            _ => None,
        }
    }

    pub fn from_kind(kind: MethodKind, seed: Option<u64>) -> Result<Self> {
        match (kind, seed) {
            (MethodKind::Random, Some(seed)) => Ok(InitMethod::Random { seed }),
            (MethodKind::Random, None) => Err(Error::InvalidConfig(
                "random initialization needs a seed".into(),
            )),
            (MethodKind::Farthest, _) => Ok(InitMethod::FarthestPoint),
            (MethodKind::Cao, _) => Ok(InitMethod::Cao),
            (MethodKind::Bkmodes, _) => Ok(InitMethod::BkModes),
        }
    }
}

/// Produces `k` initial centers with the given method.
pub fn initialize(
    dataset: &CategoricalDataset,
    k: usize,
    method: &InitMethod,
    config: &EngineConfig,
) -> Result<Vec<DataPoint>> {
    match *method {
        InitMethod::Random { seed } => random_init(dataset, k, seed),
        InitMethod::FarthestPoint => farthest_point_init(dataset, k),
        InitMethod::Cao => cao_init(dataset, k),
        InitMethod::BkModes => bkmodes_init(dataset, k, config),
    }
}

fn check_k(dataset: &CategoricalDataset, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::ZeroClusters);
    }
    if k > dataset.n() {
        return Err(Error::TooManyClusters { k, n: dataset.n() });
    }
    Ok(())
}

/// `k` rows with pairwise-distinct contents, drawn uniformly without
/// replacement by a lazy Fisher-Yates shuffle driven by `ChaCha8Rng::seed_from_u64(seed)`.
pub fn random_init(dataset: &CategoricalDataset, k: usize, seed: u64) -> Result<Vec<DataPoint>> {
    check_k(dataset, k)?;
    let n = dataset.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut seen: HashSet<&[u8]> = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for i in 0..n {
        let j = rng.gen_range(i..n);
        order.swap(i, j);
        let row = dataset.row_unchecked(order[i]);
        if seen.insert(row) {
            out.push(DataPoint::from(row));
            if out.len() == k {
                return Ok(out);
            }
        }
    }
    Err(Error::NotEnoughDistinctRows {
        k,
        distinct: out.len(),
    })
}

/// Per-row sum over attributes of the global frequency of the row's value.
/// Equals `m * Dens(x)` for the density-based methods.
pub fn frequency_scores(dataset: &CategoricalDataset) -> Vec<u64> {
    let table = FrequencyTable::build_all(dataset);
    dataset
        .rows()
        .map(|r| r.iter().enumerate().map(|(a, &c)| table.count(a, c)).sum())
        .collect()
}

fn argmax_lowest<I: Iterator<Item = (usize, u64)>>(it: I) -> Option<usize> {
    let mut best: Option<(u64, usize)> = None;
    for (i, v) in it {
        if best.is_none_or(|(bv, _)| v > bv) {
            best = Some((v, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Greedy selection shared by the farthest-point and density methods:
/// starting from `first`, repeatedly take the non-chosen row with the
/// largest `min over chosen c of d(x, c) * weight(x)` (weight 1 if absent).
fn greedy_select(
    dataset: &CategoricalDataset,
    k: usize,
    first: usize,
    weights: Option<&[u64]>,
) -> Vec<usize> {
    let n = dataset.n();
    let mut chosen = vec![first];
    let mut is_chosen = vec![false; n];
    is_chosen[first] = true;
    let mut min_d: Vec<u32> = (0..n)
        .map(|i| hamming_unchecked(dataset.row_unchecked(i), dataset.row_unchecked(first)))
        .collect();
    while chosen.len() < k {
        let next = argmax_lowest(
            (0..n)
                .filter(|&i| !is_chosen[i])
                .map(|i| (i, min_d[i] as u64 * weights.map_or(1, |w| w[i]))),
        )
        .expect("k <= n leaves a candidate");
        chosen.push(next);
        is_chosen[next] = true;
        let c = dataset.row_unchecked(next);
        for (i, d) in min_d.iter_mut().enumerate() {
            *d = (*d).min(hamming_unchecked(dataset.row_unchecked(i), c));
        }
    }
    chosen
}

/// Farthest-point heuristic: the first center is the row with the highest
/// attribute-frequency score, each next one maximizes the minimum distance
/// to the centers already chosen.
pub fn farthest_point_init(dataset: &CategoricalDataset, k: usize) -> Result<Vec<DataPoint>> {
    farthest_point_indices(dataset, k).map(|ix| rows_of(dataset, &ix))
}

pub fn farthest_point_indices(dataset: &CategoricalDataset, k: usize) -> Result<Vec<usize>> {
    check_k(dataset, k)?;
    let scores = frequency_scores(dataset);
    let first = argmax_lowest(scores.into_iter().enumerate()).expect("n >= 1");
    Ok(greedy_select(dataset, k, first, None))
}

/// Density of every row: the mean over attributes of the number of rows
/// sharing the row's value at that attribute.
pub fn cao_density(dataset: &CategoricalDataset) -> Vec<f64> {
    let m = dataset.m() as f64;
    frequency_scores(dataset)
        .into_iter()
        .map(|s| s as f64 / m)
        .collect()
}

/// Density-distance initialization. Selection uses the integer score
/// `m * Dens(x)`, which orders rows exactly as `Dens(x)` does.
pub fn cao_init(dataset: &CategoricalDataset, k: usize) -> Result<Vec<DataPoint>> {
    cao_indices(dataset, k).map(|ix| rows_of(dataset, &ix))
}

pub fn cao_indices(dataset: &CategoricalDataset, k: usize) -> Result<Vec<usize>> {
    check_k(dataset, k)?;
    let density = frequency_scores(dataset);
    let first = argmax_lowest(density.iter().copied().enumerate()).expect("n >= 1");
    Ok(greedy_select(dataset, k, first, Some(&density)))
}

fn rows_of(dataset: &CategoricalDataset, ix: &[usize]) -> Vec<DataPoint> {
    ix.iter()
        .map(|&i| DataPoint::from(dataset.row_unchecked(i)))
        .collect()
}

/// A cluster split produced by the two-center K-Modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bisection {
    pub left: RowSubset,
    pub right: RowSubset,
    pub left_center: DataPoint,
    pub right_center: DataPoint,
    pub left_sum: u64,
    pub right_sum: u64,
}

/// Splits a cluster in two with K-Modes (K = 2), seeded with the cluster's
/// mode and the member farthest from it.
pub fn two_modes_bisect(
    dataset: &CategoricalDataset,
    subset: &RowSubset,
    config: &EngineConfig,
) -> Result<Bisection> {
    config.validate()?;
    subset.check(dataset)?;
    let pool = config.build_pool()?;
    let mode =
        mode_of(&FrequencyTable::build(dataset, subset)).map_err(|_| Error::NotBisectable)?;
    bisect_with(dataset, subset, mode, config, pool.as_ref())
}

fn bisect_with(
    dataset: &CategoricalDataset,
    subset: &RowSubset,
    mode: DataPoint,
    config: &EngineConfig,
    pool: Option<&ThreadPool>,
) -> Result<Bisection> {
    if subset.len() < 2 {
        return Err(Error::NotBisectable);
    }
    let mut far: Option<(u32, usize)> = None;
    for i in subset.iter() {
        let d = hamming_unchecked(dataset.row_unchecked(i), mode.as_slice());
        if far.is_none_or(|(bd, _)| d > bd) {
            far = Some((d, i));
        }
    }
    let (far_d, far_i) = far.expect("subset is nonempty");
    if far_d == 0 {
        return Err(Error::NotBisectable);
    }
    let initial = [mode, DataPoint::from(dataset.row_unchecked(far_i))];
    let out = lloyd(
        dataset,
        Rows::Subset(subset.as_slice()),
        &initial,
        config,
        pool,
        &mut |_| {},
    );
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, &j) in subset.iter().zip(&out.assignments) {
        if j == 0 {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    let mut centers = out.centers.into_iter();
    Ok(Bisection {
        left: RowSubset::from_sorted(left),
        right: RowSubset::from_sorted(right),
        left_center: centers.next().unwrap(),
        right_center: centers.next().unwrap(),
        left_sum: out.cluster_totals[0],
        right_sum: out.cluster_totals[1],
    })
}

/// One cluster of a bisecting run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisectCluster {
    pub rows: RowSubset,
    pub center: DataPoint,
    /// Sum of distances from the rows to `center`.
    pub sum: u64,
}

impl BisectCluster {
    /// A cluster is bisectable iff some member differs from its mode.
    pub fn is_bisectable(&self) -> bool {
        self.sum > 0
    }
}

/// Clusters of a bisecting run, in creation order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BisectState {
    pub clusters: Vec<BisectCluster>,
}

impl BisectState {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.clusters.iter().map(|c| c.sum).sum()
    }

    pub fn centers(&self) -> Vec<DataPoint> {
        self.clusters.iter().map(|c| c.center.clone()).collect()
    }
}

/// What a single bisection did, reported to observers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisectStep {
    /// Position of the split cluster in the state before the split.
    pub selected: usize,
    pub parent_sum: u64,
    pub left_sum: u64,
    pub right_sum: u64,
}

/// Bisecting K-Modes seeding: returns the K cluster centers in creation order.
pub fn bkmodes_init(
    dataset: &CategoricalDataset,
    k: usize,
    config: &EngineConfig,
) -> Result<Vec<DataPoint>> {
    bkmodes_partition(dataset, k, config, &mut |_, _| {}).map(|s| s.centers())
}

/// Runs the bisecting process to `k` clusters and returns the final state.
///
/// `observer` sees each step together with the state before the split.
/// The split cluster is removed and its two halves are appended.
pub fn bkmodes_partition(
    dataset: &CategoricalDataset,
    k: usize,
    config: &EngineConfig,
    observer: &mut dyn FnMut(&BisectStep, &BisectState),
) -> Result<BisectState> {
    config.validate()?;
    check_k(dataset, k)?;
    let pool = config.build_pool()?;
    let all = RowSubset::all(dataset.n());
    let table = FrequencyTable::build_all(dataset);
    let center = mode_of(&table)?;
    let mut state = BisectState {
        clusters: vec![BisectCluster {
            sum: table.distance_sum_to(center.as_slice()),
            rows: all,
            center,
        }],
    };
    while state.len() < k {
        let selected = argmax_lowest(
            state
                .clusters
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_bisectable())
                .map(|(i, c)| (i, c.sum)),
        )
        .ok_or(Error::CannotProduceK {
            k,
            produced: state.len(),
        })?;
        let parent = &state.clusters[selected];
        let split = bisect_with(
            dataset,
            &parent.rows,
            parent.center.clone(),
            config,
            pool.as_ref(),
        )?;
        observer(
            &BisectStep {
                selected,
                parent_sum: parent.sum,
                left_sum: split.left_sum,
                right_sum: split.right_sum,
            },
            &state,
        );
        state.clusters.remove(selected);
        state.clusters.push(BisectCluster {
            rows: split.left,
            center: split.left_center,
            sum: split.left_sum,
        });
        state.clusters.push(BisectCluster {
            rows: split.right,
            center: split.right_center,
            sum: split.right_sum,
        });
    }
    Ok(state)
}
