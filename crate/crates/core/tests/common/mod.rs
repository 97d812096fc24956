//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's kernels: distances, modes and the
//! K-Modes loop are rewritten in the most direct form.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dist(x: &[u8], y: &[u8]) -> u64 {
    x.iter().zip(y).filter(|(a, b)| a != b).count() as u64
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, cards: &[usize]) -> Vec<Vec<u8>> {
    (0..n)
        .map(|_| cards.iter().map(|&c| rng.gen_range(0..c) as u8).collect())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-attribute majority with lowest-code ties, by direct counting.
pub fn naive_mode(members: &[&Vec<u8>], cards: &[usize]) -> Vec<u8> {
    cards
        .iter()
        .enumerate()
        .map(|(a, &c)| {
            let mut counts = vec![0usize; c];
            for r in members {
                counts[r[a] as usize] += 1;
            }
            let mut best = 0;
            for v in 1..c {
                if counts[v] > counts[best] {
                    best = v;
                }
            }
            best as u8
        })
        .collect()
}

/// Every point of the category product space.
pub fn product_space(cards: &[usize]) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for &c in cards {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..c as u8).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn exhaustive_min_sum(rows: &[Vec<u8>], cards: &[usize]) -> u64 {
    product_space(cards)
        .iter()
        .map(|z| rows.iter().map(|r| dist(r, z)).sum::<u64>())
        .min()
        .unwrap()
}

pub struct NaiveFit {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<u8>>,
    pub total: u64,
    pub iterations: usize,
    pub converged: bool,
}

fn nearest(row: &[u8], centers: &[Vec<u8>], prev: Option<usize>) -> usize {
    let d: Vec<u64> = centers.iter().map(|c| dist(row, c)).collect();
    let best = *d.iter().min().unwrap();
    match prev {
        Some(p) if d[p] == best => p,
        _ => d.iter().position(|&x| x == best).unwrap(),
    }
}

/// Straightforward K-Modes with the documented rules: stay-on-tie
/// assignment, lowest-code mode ties, farthest-point reseeding of empty
/// clusters, stop on zero changes or on unchanged centers.
pub fn naive_kmodes(
    rows: &[Vec<u8>],
    cards: &[usize],
    init: &[Vec<u8>],
    max_iter: usize,
) -> NaiveFit {
    let k = init.len();
    let mut centers = init.to_vec();
    let mut assign: Option<Vec<usize>> = None;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let next: Vec<usize> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| nearest(r, &centers, assign.as_ref().map(|a| a[i])))
            .collect();
        iterations += 1;
        if assign.as_ref() == Some(&next) {
            converged = true;
            break;
        }
        let mut a = next;
        let old = centers.clone();
        for j in 0..k {
            let members: Vec<&Vec<u8>> = rows
                .iter()
                .zip(&a)
                .filter(|(_, &x)| x == j)
                .map(|(r, _)| r)
                .collect();
            if !members.is_empty() {
                centers[j] = naive_mode(&members, cards);
            }
        }
        let empties: Vec<usize> = (0..k).filter(|j| !a.contains(j)).collect();
        for &j in &empties {
            let size = |c: usize, a: &[usize]| a.iter().filter(|&&x| x == c).count();
            let mut best: Option<(u64, usize)> = None;
            for (i, r) in rows.iter().enumerate() {
                if size(a[i], &a) < 2 {
                    continue;
                }
                let d = dist(r, &centers[a[i]]);
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, i));
                }
            }
            let (_, i) = best.unwrap();
            let donor = a[i];
            a[i] = j;
            centers[j] = rows[i].clone();
            let members: Vec<&Vec<u8>> = rows
                .iter()
                .zip(&a)
                .filter(|(_, &x)| x == donor)
                .map(|(r, _)| r)
                .collect();
            centers[donor] = naive_mode(&members, cards);
        }
        assign = Some(a);
        if empties.is_empty() && centers == old {
            converged = true;
            break;
        }
    }
    let assignments = assign.unwrap();
    let total = rows
        .iter()
        .zip(&assignments)
        .map(|(r, &j)| dist(r, &centers[j]))
        .sum();
    NaiveFit {
        assignments,
        centers,
        total,
        iterations,
        converged,
    }
}

/// Brute-force replay of the density-distance selection rule.
pub fn naive_cao(rows: &[Vec<u8>], k: usize) -> Vec<usize> {
    let n = rows.len();
    // Dens(x) * m: pairwise attribute matches, O(n^2 m)
    let dens: Vec<u64> = rows
        .iter()
        .map(|x| {
            rows.iter()
                .map(|y| x.iter().zip(y).filter(|(a, b)| a == b).count() as u64)
                .sum()
        })
        .collect();
    let mut chosen = vec![(0..n)
        .max_by_key(|&i| (dens[i], std::cmp::Reverse(i)))
        .unwrap()];
    while chosen.len() < k {
        let score = |i: usize| {
            chosen
                .iter()
                .map(|&c| dist(&rows[i], &rows[c]) * dens[i])
                .min()
                .unwrap()
        };
        let next = (0..n)
            .filter(|i| !chosen.contains(i))
            .max_by_key(|&i| (score(i), std::cmp::Reverse(i)))
            .unwrap();
        chosen.push(next);
    }
    chosen
}
