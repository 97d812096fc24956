//! Lloyd-style K-Modes iteration.
//!
//! One iteration is an assignment pass followed, if anything moved, by a
//! mode update. Tie rules:
//!
//! * assignment: a point stays in its previous cluster when that cluster is
//!   among the nearest, otherwise the lowest cluster index wins;
//! * mode: the lowest category code wins a count tie.
//!
//! Per-cluster frequency tables are maintained incrementally across
//! assignment passes, so an update costs `O(K * sum(m_i))` rather than a
//! full data pass.

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::dataset::{CategoricalDataset, DataPoint};
use crate::error::{Error, Result};
use crate::metric::{hamming_unchecked, FrequencyTable};

pub const DEFAULT_MAX_ITERATIONS: usize = 300;

/// Environment variable holding the default worker count for internal kernels.
pub const THREADS_ENV: &str = "BKMODES_THREADS";

// Below this many rows an assignment pass runs on the calling thread.
const PARALLEL_MIN_ROWS: usize = 2048;

/// What to do when an update step finds a cluster with no members.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyClusterPolicy {
    /// Move the point farthest from its own center (lowest row index on
    /// ties) into the empty cluster and make it that cluster's center.
    #[default]
    ReseedFarthest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub max_iterations: usize,
    pub empty_cluster_policy: EmptyClusterPolicy,
    /// Worker threads for assignment passes. `None` reads [`THREADS_ENV`],
    /// falling back to one thread.
    pub threads: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            empty_cluster_policy: EmptyClusterPolicy::ReseedFarthest,
            threads: None,
        }
    }
}

impl EngineConfig {
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_threads(&self) -> usize {
        self.threads
            .or_else(|| {
                std::env::var(THREADS_ENV)
                    .ok()
                    .and_then(|v| v.trim().parse().ok())
            })
            .filter(|&t| t > 0)
            .unwrap_or(1)
    }

    pub(crate) fn build_pool(&self) -> Result<Option<ThreadPool>> {
        let threads = self.resolved_threads();
        if threads <= 1 {
            return Ok(None);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map(Some)
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
    }
}

/// Result of a K-Modes fit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centers: Vec<DataPoint>,
    /// Cluster index per row.
    pub assignments: Vec<usize>,
    /// Exact sum over rows of the distance to the assigned center.
    pub total_distance: u64,
    /// Assignment passes executed.
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterModel {
    /// Assembles an unfitted model. `total_distance` is left at 0; see [`crate::metric::total_distance`].
    pub fn from_parts(centers: Vec<DataPoint>, assignments: Vec<usize>) -> Self {
        ClusterModel {
            k: centers.len(),
            centers,
            assignments,
            total_distance: 0,
            iterations: 0,
            converged: false,
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &j in &self.assignments {
            sizes[j] += 1;
        }
        sizes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Assign,
    Update,
}

/// Emitted after every half-step of a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepEvent {
    pub iteration: usize,
    pub phase: Phase,
    /// Exact total distance under the current assignments and centers.
    pub total_distance: u64,
    /// Points that changed cluster (assign phase only).
    pub changed: usize,
    /// Empty clusters reseeded (update phase only).
    pub reseeded: usize,
}

/// Rows a fit runs over: the whole dataset or a sorted subset.
#[derive(Clone, Copy)]
pub(crate) enum Rows<'a> {
    All(usize),
    Subset(&'a [usize]),
}

impl Rows<'_> {
    #[inline]
    pub(crate) fn len(&self) -> usize {
        match self {
            Rows::All(n) => *n,
            Rows::Subset(s) => s.len(),
        }
    }

    #[inline]
    pub(crate) fn get(&self, pos: usize) -> usize {
        match self {
            Rows::All(_) => pos,
            Rows::Subset(s) => s[pos],
        }
    }
}

/// Output of the internal Lloyd loop; `assignments` is indexed by position in `Rows`.
pub(crate) struct LloydOutcome {
    pub centers: Vec<DataPoint>,
    pub assignments: Vec<usize>,
    pub cluster_totals: Vec<u64>,
    pub iterations: usize,
    pub converged: bool,
}

#[inline]
fn nearest(row: &[u8], centers: &[u8], m: usize, previous: Option<usize>) -> (usize, u32) {
    let mut best_j = 0;
    let mut best_d = u32::MAX;
    let mut prev_d = u32::MAX;
    for (j, c) in centers.chunks_exact(m).enumerate() {
        let d = hamming_unchecked(row, c);
        if d < best_d {
            best_d = d;
            best_j = j;
        }
        if previous == Some(j) {
            prev_d = d;
        }
    }
    match previous {
        Some(p) if prev_d == best_d => (p, best_d),
        _ => (best_j, best_d),
    }
}

fn assign_pass(
    dataset: &CategoricalDataset,
    rows: Rows<'_>,
    centers: &[u8],
    previous: Option<&[usize]>,
    pool: Option<&ThreadPool>,
) -> (Vec<usize>, u64) {
    let m = dataset.m();
    let one = |pos: usize| {
        nearest(
            dataset.row_unchecked(rows.get(pos)),
            centers,
            m,
            previous.map(|p| p[pos]),
        )
    };
    let pairs: Vec<(usize, u32)> = match pool {
        Some(pool) if rows.len() >= PARALLEL_MIN_ROWS => {
            pool.install(|| (0..rows.len()).into_par_iter().map(one).collect())
        }
        _ => (0..rows.len()).map(one).collect(),
    };
    let total = pairs.iter().map(|&(_, d)| d as u64).sum();
    (pairs.into_iter().map(|(j, _)| j).collect(), total)
}

/// Recomputes centers from the tables, reseeding empty clusters.
/// Returns the number of clusters reseeded.
fn update_centers(
    dataset: &CategoricalDataset,
    rows: Rows<'_>,
    assignments: &mut [usize],
    tables: &mut [FrequencyTable],
    centers: &mut [u8],
    policy: EmptyClusterPolicy,
) -> usize {
    let m = dataset.m();
    for (t, c) in tables.iter().zip(centers.chunks_exact_mut(m)) {
        if t.size() > 0 {
            t.mode_into(c);
        }
    }
    let empties: Vec<usize> = (0..tables.len())
        .filter(|&j| tables[j].size() == 0)
        .collect();
    match policy {
        EmptyClusterPolicy::ReseedFarthest => {
            for &j in &empties {
                // A donor must keep at least one member.
                let mut best: Option<(u32, usize)> = None;
                for (pos, &a) in assignments.iter().enumerate() {
                    if tables[a].size() < 2 {
                        continue;
                    }
                    let d = hamming_unchecked(
                        dataset.row_unchecked(rows.get(pos)),
                        &centers[a * m..(a + 1) * m],
                    );
                    if best.is_none_or(|(bd, _)| d > bd) {
                        best = Some((d, pos));
                    }
                }
                let (_, pos) = best.expect("K <= number of rows guarantees a donor");
                let donor = assignments[pos];
                let row = dataset.row_unchecked(rows.get(pos));
                tables[donor].remove(row);
                tables[j].add(row);
                assignments[pos] = j;
                centers[j * m..(j + 1) * m].copy_from_slice(row);
                tables[donor].mode_into(&mut centers[donor * m..(donor + 1) * m]);
            }
        }
    }
    empties.len()
}

fn cluster_totals(tables: &[FrequencyTable], centers: &[u8], m: usize) -> Vec<u64> {
    tables
        .iter()
        .zip(centers.chunks_exact(m))
        .map(|(t, c)| t.distance_sum_to(c))
        .collect()
}

pub(crate) fn lloyd(
    dataset: &CategoricalDataset,
    rows: Rows<'_>,
    initial: &[DataPoint],
    config: &EngineConfig,
    pool: Option<&ThreadPool>,
    observer: &mut dyn FnMut(&StepEvent),
) -> LloydOutcome {
    let m = dataset.m();
    let k = initial.len();
    let mut centers: Vec<u8> = initial.iter().flat_map(|c| c.as_slice()).copied().collect();
    let mut tables = vec![FrequencyTable::empty(dataset.cardinalities()); k];
    let mut assignments: Option<Vec<usize>> = None;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        let (next, assign_total) =
            assign_pass(dataset, rows, &centers, assignments.as_deref(), pool);
        iterations += 1;
        let changed = match &assignments {
            None => {
                for (pos, &j) in next.iter().enumerate() {
                    tables[j].add(dataset.row_unchecked(rows.get(pos)));
                }
                next.len()
            }
            Some(prev) => {
                let mut changed = 0;
                for (pos, (&old, &new)) in prev.iter().zip(&next).enumerate() {
                    if old != new {
                        let row = dataset.row_unchecked(rows.get(pos));
                        tables[old].remove(row);
                        tables[new].add(row);
                        changed += 1;
                    }
                }
                changed
            }
        };
        let first_pass = assignments.is_none();
        assignments = Some(next);
        observer(&StepEvent {
            iteration: iterations,
            phase: Phase::Assign,
            total_distance: assign_total,
            changed,
            reseeded: 0,
        });
        if !first_pass && changed == 0 {
            converged = true;
            break;
        }

        let before = centers.clone();
        let assign = assignments.as_mut().unwrap();
        let reseeded = update_centers(
            dataset,
            rows,
            assign,
            &mut tables,
            &mut centers,
            config.empty_cluster_policy,
        );
        observer(&StepEvent {
            iteration: iterations,
            phase: Phase::Update,
            total_distance: cluster_totals(&tables, &centers, m).iter().sum(),
            changed: 0,
            reseeded,
        });
        // Unchanged centers mean the next pass would move nobody.
        if reseeded == 0 && centers == before {
            converged = true;
            break;
        }
    }

    LloydOutcome {
        cluster_totals: cluster_totals(&tables, &centers, m),
        centers: centers.chunks_exact(m).map(DataPoint::from).collect(),
        assignments: assignments.unwrap_or_default(),
        iterations,
        converged,
    }
}

fn check_centers(dataset: &CategoricalDataset, centers: &[DataPoint]) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::ZeroClusters);
    }
    if centers.len() > dataset.n() {
        return Err(Error::TooManyClusters {
            k: centers.len(),
            n: dataset.n(),
        });
    }
    centers
        .iter()
        .try_for_each(|c| dataset.check_point(c.as_slice()))
}

/// Assigns every row to its nearest center.
///
/// Returns the assignments and the number of rows whose cluster differs
/// from `previous` (all rows when there is no previous assignment).
pub fn assign_step(
    dataset: &CategoricalDataset,
    centers: &[DataPoint],
    previous: Option<&[usize]>,
) -> Result<(Vec<usize>, usize)> {
    if centers.is_empty() {
        return Err(Error::ZeroClusters);
    }
    centers
        .iter()
        .try_for_each(|c| dataset.check_point(c.as_slice()))?;
    if let Some(p) = previous {
        if p.len() != dataset.n() {
            return Err(Error::IncompleteAssignment(format!(
                "{} previous assignments for {} rows",
                p.len(),
                dataset.n()
            )));
        }
        if p.iter().any(|&j| j >= centers.len()) {
            return Err(Error::IncompleteAssignment(
                "previous cluster index out of range".into(),
            ));
        }
    }
    let flat: Vec<u8> = centers.iter().flat_map(|c| c.as_slice()).copied().collect();
    let (next, _) = assign_pass(dataset, Rows::All(dataset.n()), &flat, previous, None);
    let changed = match previous {
        None => next.len(),
        Some(p) => p.iter().zip(&next).filter(|(a, b)| a != b).count(),
    };
    Ok((next, changed))
}

/// Recomputes the K centers as cluster modes.
///
/// Empty clusters are resolved by `policy`, which may move rows between
/// clusters; `assignments` is updated in place when that happens.
pub fn update_step(
    dataset: &CategoricalDataset,
    assignments: &mut [usize],
    k: usize,
    policy: EmptyClusterPolicy,
) -> Result<Vec<DataPoint>> {
    if k == 0 {
        return Err(Error::ZeroClusters);
    }
    if k > dataset.n() {
        return Err(Error::TooManyClusters { k, n: dataset.n() });
    }
    if assignments.len() != dataset.n() || assignments.iter().any(|&j| j >= k) {
        return Err(Error::IncompleteAssignment(
            "assignments must cover every row with indices below k".into(),
        ));
    }
    let m = dataset.m();
    let mut tables = vec![FrequencyTable::empty(dataset.cardinalities()); k];
    for (i, &j) in assignments.iter().enumerate() {
        tables[j].add(dataset.row_unchecked(i));
    }
    let mut centers = vec![0u8; k * m];
    update_centers(
        dataset,
        Rows::All(dataset.n()),
        assignments,
        &mut tables,
        &mut centers,
        policy,
    );
    Ok(centers.chunks_exact(m).map(DataPoint::from).collect())
}

/// Runs K-Modes from the given initial centers until no point changes
/// cluster or `max_iterations` assignment passes have run.
pub fn kmodes_fit(
    dataset: &CategoricalDataset,
    initial_centers: &[DataPoint],
    config: &EngineConfig,
) -> Result<ClusterModel> {
    kmodes_fit_observed(dataset, initial_centers, config, &mut |_| {})
}

/// [`kmodes_fit`] with a callback invoked after every assign and update half-step.
pub fn kmodes_fit_observed(
    dataset: &CategoricalDataset,
    initial_centers: &[DataPoint],
    config: &EngineConfig,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<ClusterModel> {
    config.validate()?;
    check_centers(dataset, initial_centers)?;
    let pool = config.build_pool()?;
    let out = lloyd(
        dataset,
        Rows::All(dataset.n()),
        initial_centers,
        config,
        pool.as_ref(),
        observer,
    );
    Ok(ClusterModel {
        k: initial_centers.len(),
        total_distance: out.cluster_totals.iter().sum(),
        centers: out.centers,
        assignments: out.assignments,
        iterations: out.iterations,
        converged: out.converged,
    })
}
