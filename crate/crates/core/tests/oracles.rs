//! Library results checked against the naive implementations in `common`.

mod common;

use bkmodes_core::init::{cao_indices, farthest_point_indices, frequency_scores};
use bkmodes_core::metric::total_distance;
use bkmodes_core::{
    assign_step, bkmodes_init, bkmodes_partition, cao_density, kmodes_fit, kmodes_fit_observed,
    mode_of, random_init, sd_total, sum_of_distances, two_modes_bisect, CategoricalDataset,
    ClusterModel, DataPoint, EngineConfig, FrequencyTable, Phase, RowSubset, SynthParams,
};
use common::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn dataset(rows: &[Vec<u8>], cards: &[usize]) -> CategoricalDataset {
    CategoricalDataset::from_rows(rows, Some(cards.to_vec())).unwrap()
}

fn points(rows: &[Vec<u8>]) -> Vec<DataPoint> {
    rows.iter().cloned().map(DataPoint::new).collect()
}

#[test]
fn mode_matches_exhaustive_search() {
    let mut r = rng(1);
    for _ in 0..60 {
        let m = r.gen_range(1..=4);
        let cards: Vec<usize> = (0..m).map(|_| r.gen_range(1..=4)).collect();
        let n = r.gen_range(1..=30);
        let rows = random_rows(&mut r, n, &cards);
        let ds = dataset(&rows, &cards);
        let mode = mode_of(&FrequencyTable::build_all(&ds)).unwrap();
        let got: u64 = rows.iter().map(|x| dist(x, mode.as_slice())).sum();
        assert_eq!(got, exhaustive_min_sum(&rows, &cards));
        let members: Vec<&Vec<u8>> = rows.iter().collect();
        assert_eq!(mode.as_slice(), naive_mode(&members, &cards).as_slice());
    }
}

#[test]
fn fit_matches_naive_kmodes() {
    let mut r = rng(2);
    let cards = [3, 4, 2, 5];
    let rows = random_rows(&mut r, 30, &cards);
    let ds = dataset(&rows, &cards);
    let init = rows[..3].to_vec();
    let model = kmodes_fit(&ds, &points(&init), &EngineConfig::default()).unwrap();
    let naive = naive_kmodes(&rows, &cards, &init, 300);
    assert_eq!(model.assignments, naive.assignments);
    assert_eq!(model.total_distance, naive.total);
    assert_eq!(model.iterations, naive.iterations);
    assert_eq!(model.converged, naive.converged);
    assert_eq!(model.centers, points(&naive.centers));
}

#[test]
fn assign_step_is_argmin_with_lowest_index() {
    let mut r = rng(3);
    let cards = [3, 3, 3, 3];
    let rows = random_rows(&mut r, 50, &cards);
    let centers = random_rows(&mut r, 3, &cards);
    let ds = dataset(&rows, &cards);
    let (a, changed) = assign_step(&ds, &points(&centers), None).unwrap();
    assert_eq!(changed, 50);
    for (i, row) in rows.iter().enumerate() {
        let d: Vec<u64> = centers.iter().map(|c| dist(row, c)).collect();
        let min = *d.iter().min().unwrap();
        assert_eq!(a[i], d.iter().position(|&x| x == min).unwrap(), "row {i}");
    }
}

#[test]
fn cao_selection_matches_brute_force() {
    let mut r = rng(4);
    for _ in 0..10 {
        let cards = [2, 3, 4];
        let rows = random_rows(&mut r, 20, &cards);
        let ds = dataset(&rows, &cards);
        let k = r.gen_range(1..=6);
        assert_eq!(cao_indices(&ds, k).unwrap(), naive_cao(&rows, k));
    }
}

#[test]
fn cao_density_matches_pairwise_definition() {
    let mut r = rng(5);
    let cards = [2, 3, 4, 3, 2];
    let rows = random_rows(&mut r, 25, &cards);
    let ds = dataset(&rows, &cards);
    let m = cards.len() as f64;
    for (x, got) in rows.iter().zip(cao_density(&ds)) {
        let matches: usize = rows
            .iter()
            .map(|y| x.iter().zip(y).filter(|(a, b)| a == b).count())
            .sum();
        assert_eq!(got, matches as f64 / m);
    }
}

#[test]
fn frequency_table_survives_random_updates() {
    let mut r = rng(6);
    let cards = [4, 2, 7];
    let pool = random_rows(&mut r, 40, &cards);
    let mut table = FrequencyTable::empty(&cards);
    let mut members: Vec<usize> = Vec::new();
    for _ in 0..1000 {
        if members.is_empty() || r.gen_bool(0.55) {
            let i = r.gen_range(0..pool.len());
            table.update(&pool[i], 1).unwrap();
            members.push(i);
        } else {
            let at = r.gen_range(0..members.len());
            let i = members.swap_remove(at);
            table.update(&pool[i], -1).unwrap();
        }
    }
    assert_eq!(table.size(), members.len() as u64);
    for (a, &c) in cards.iter().enumerate() {
        for v in 0..c as u8 {
            let expect = members.iter().filter(|&&i| pool[i][a] == v).count() as u64;
            assert_eq!(table.count(a, v), expect);
        }
    }
}

#[test]
fn subset_sum_of_distances() {
    let mut r = rng(7);
    let cards = [3, 3, 5, 2];
    let rows = random_rows(&mut r, 60, &cards);
    let ds = dataset(&rows, &cards);
    let mut ix: Vec<usize> = (0..60).collect();
    ix.shuffle(&mut r);
    ix.truncate(20);
    ix.sort_unstable();
    let center = random_rows(&mut r, 1, &cards).remove(0);
    let expect: u64 = ix.iter().map(|&i| dist(&rows[i], &center)).sum();
    let subset = RowSubset::new(ix).unwrap();
    assert_eq!(sum_of_distances(&ds, &subset, &center).unwrap(), expect);
}

#[test]
fn sd_brute_force_and_relabeling() {
    let mut r = rng(8);
    let cards = [3, 3, 3];
    let rows = random_rows(&mut r, 45, &cards);
    let ds = dataset(&rows, &cards);
    let centers = random_rows(&mut r, 4, &cards);
    let assignments: Vec<usize> = (0..45).map(|_| r.gen_range(0..4)).collect();
    let expect: u64 = rows
        .iter()
        .zip(&assignments)
        .map(|(x, &j)| dist(x, &centers[j]))
        .sum();
    let model = ClusterModel::from_parts(points(&centers), assignments.clone());
    assert_eq!(total_distance(&ds, &model).unwrap(), expect);
    assert_eq!(sd_total(&ds, &model).unwrap(), expect as f64 / 45.0);

    let perm = [2usize, 0, 3, 1];
    let mut relabeled = vec![DataPoint::new(vec![]); 4];
    for (j, c) in centers.iter().enumerate() {
        relabeled[perm[j]] = DataPoint::new(c.clone());
    }
    let moved = ClusterModel::from_parts(relabeled, assignments.iter().map(|&j| perm[j]).collect());
    assert_eq!(
        sd_total(&ds, &moved).unwrap(),
        sd_total(&ds, &model).unwrap()
    );
}

#[test]
fn bisection_never_increases_the_total() {
    let mut r = rng(9);
    let cards = [4, 4, 4, 4, 4];
    let rows = random_rows(&mut r, 40, &cards);
    let ds = dataset(&rows, &cards);
    let all = RowSubset::all(40);
    let members: Vec<&Vec<u8>> = rows.iter().collect();
    let parent = naive_mode(&members, &cards);
    let parent_sum: u64 = rows.iter().map(|x| dist(x, &parent)).sum();
    let b = two_modes_bisect(&ds, &all, &EngineConfig::default()).unwrap();
    assert!(!b.left.is_empty() && !b.right.is_empty());
    assert_eq!(b.left.len() + b.right.len(), 40);
    let side_sum =
        |s: &RowSubset, c: &DataPoint| s.iter().map(|i| dist(&rows[i], c.as_slice())).sum::<u64>();
    assert_eq!(b.left_sum, side_sum(&b.left, &b.left_center));
    assert_eq!(b.right_sum, side_sum(&b.right, &b.right_center));
    assert!(b.left_sum + b.right_sum <= parent_sum);
}

#[test]
fn bkmodes_finds_planted_modes() {
    let s = bkmodes_core::synth_generate(&SynthParams {
        k_true: 4,
        n: 800,
        m: 20,
        cardinality: 5,
        flip_prob: 0.1,
        seed: 17,
    })
    .unwrap();
    let centers = bkmodes_init(&s.dataset, 4, &EngineConfig::default()).unwrap();
    let model = kmodes_fit(&s.dataset, &centers, &EngineConfig::default()).unwrap();
    let mut matched: Vec<usize> = model
        .centers
        .iter()
        .map(|c| {
            (0..4)
                .min_by_key(|&t| dist(c.as_slice(), s.planted_modes[t].as_slice()))
                .unwrap()
        })
        .collect();
    for (c, &t) in model.centers.iter().zip(&matched) {
        assert!(dist(c.as_slice(), s.planted_modes[t].as_slice()) <= 2);
    }
    matched.sort_unstable();
    assert_eq!(matched, vec![0, 1, 2, 3]);
}

#[test]
fn random_init_depends_on_seed() {
    let mut r = rng(10);
    let cards = [5, 5, 5, 5];
    let rows = random_rows(&mut r, 200, &cards);
    let ds = dataset(&rows, &cards);
    let a = random_init(&ds, 5, 1).unwrap();
    assert_eq!(a, random_init(&ds, 5, 1).unwrap());
    assert_ne!(a, random_init(&ds, 5, 2).unwrap());
    for c in &a {
        assert!(rows.iter().any(|x| x.as_slice() == c.as_slice()));
    }
}

#[test]
fn farthest_point_maximizes_min_distance() {
    let mut r = rng(11);
    let cards = [3, 3, 3, 3, 3];
    let rows = random_rows(&mut r, 30, &cards);
    let ds = dataset(&rows, &cards);
    let ix = farthest_point_indices(&ds, 6).unwrap();
    let scores = frequency_scores(&ds);
    assert_eq!(scores[ix[0]], *scores.iter().max().unwrap());
    for step in 1..ix.len() {
        let min_to = |i: usize| {
            ix[..step]
                .iter()
                .map(|&c| dist(&rows[i], &rows[c]))
                .min()
                .unwrap()
        };
        let best = (0..30)
            .filter(|i| !ix[..step].contains(i))
            .map(min_to)
            .max()
            .unwrap();
        assert_eq!(min_to(ix[step]), best);
    }
}

#[test]
fn observed_totals_never_increase() {
    let s = bkmodes_core::synth_generate(&SynthParams {
        k_true: 6,
        n: 600,
        m: 10,
        cardinality: 4,
        flip_prob: 0.35,
        seed: 21,
    })
    .unwrap();
    let init = random_init(&s.dataset, 6, 3).unwrap();
    let mut events = Vec::new();
    let model = kmodes_fit_observed(&s.dataset, &init, &EngineConfig::default(), &mut |e| {
        events.push(*e)
    })
    .unwrap();
    assert!(model.converged);
    assert_eq!(events.first().unwrap().phase, Phase::Assign);
    for w in events.windows(2) {
        assert!(w[1].total_distance <= w[0].total_distance, "{:?}", w);
    }
    assert_eq!(events.last().unwrap().total_distance, model.total_distance);
}

#[test]
fn thread_count_does_not_change_results() {
    let s = bkmodes_core::synth_generate(&SynthParams {
        k_true: 5,
        n: 5000,
        m: 12,
        cardinality: 4,
        flip_prob: 0.3,
        seed: 23,
    })
    .unwrap();
    let one = EngineConfig::default().with_threads(1);
    let four = EngineConfig::default().with_threads(4);
    let c1 = bkmodes_init(&s.dataset, 7, &one).unwrap();
    assert_eq!(c1, bkmodes_init(&s.dataset, 7, &four).unwrap());
    assert_eq!(
        kmodes_fit(&s.dataset, &c1, &one).unwrap(),
        kmodes_fit(&s.dataset, &c1, &four).unwrap()
    );
    let mut sums = Vec::new();
    bkmodes_partition(&s.dataset, 7, &four, &mut |step, _| {
        sums.push(step.parent_sum)
    })
    .unwrap();
    assert_eq!(sums.len(), 6);
}
