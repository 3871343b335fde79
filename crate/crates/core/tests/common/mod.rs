#![allow(dead_code)]

use isocone_core::PreOrder;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random pre-order on `s` elements: a random DAG over a shuffled labelling,
/// occasionally with a back edge that creates a cycle.
pub fn random_preorder(rng: &mut impl Rng, s: usize) -> PreOrder {
    let mut perm: Vec<usize> = (0..s).collect();
    perm.shuffle(rng);
    let density = rng.random_range(0.1..0.6);
    let mut edges = Vec::new();
    for i in 0..s {
        for j in i + 1..s {
            if rng.random_bool(density) {
                edges.push((perm[i], perm[j]));
            }
        }
    }
    if s >= 2 && rng.random_bool(0.15) {
        let a = rng.random_range(0..s);
        let b = rng.random_range(0..s);
        edges.push((a, b));
    }
    edges.shuffle(rng);
    PreOrder::from_indices(s, &edges).unwrap()
}

/// Isotonic vector built as the running maximum of random integer levels
/// over all predecessors; produces plateaus and ties.
pub fn random_isotonic(rng: &mut impl Rng, order: &PreOrder, levels: i32, scale: f64) -> Vec<f64> {
    let s = order.len();
    let base: Vec<f64> = (0..s)
        .map(|_| rng.random_range(0..levels) as f64 * scale)
        .collect();
    (0..s)
        .map(|i| {
            (0..s)
                .filter(|&j| order.precedes(j, i))
                .map(|j| base[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn uniform_vec(rng: &mut impl Rng, s: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..s).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn wnorm(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), w)| (x - y) * (x - y) * w)
        .sum::<f64>()
        .sqrt()
}
