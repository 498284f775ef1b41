//! Synthetic graphs for tests and benchmarks.

use std::collections::HashSet;

use rand::Rng;

use crate::graph::{Edge, WeightedGraph};

/// Draws `count` distinct weights in `(0, 1]`.
fn distinct_weights<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = 1.0 - rng.gen::<f64>();
        if seen.insert(w.to_bits()) {
            out.push(w);
        }
    }
    out
}

/// Random connected simple graph with `n` vertices and `m` edges (clamped to
/// `[n - 1, n(n - 1)/2]`) and pairwise distinct weights.
///
/// A random recursive tree guarantees connectivity; the remaining edges are
/// drawn uniformly among absent pairs.
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, m: usize) -> WeightedGraph {
    assert!(n >= 1);
    let max_m = n * (n - 1) / 2;
    let m = m.clamp(n - 1, max_m);
    let mut pairs = HashSet::with_capacity(m);
    let mut list = Vec::with_capacity(m);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        pairs.insert((u, v));
        list.push((u, v));
    }
    if m > max_m / 2 {
        // Dense: enumerate the complement and sample from it.
        let mut rest: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|p| !pairs.contains(p))
            .collect();
        for i in 0..m - list.len() {
            let j = rng.gen_range(i..rest.len());
            rest.swap(i, j);
            list.push(rest[i]);
        }
    } else {
        while list.len() < m {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v {
                continue;
            }
            let p = (u.min(v), u.max(v));
            if pairs.insert(p) {
                list.push(p);
            }
        }
    }
    let weights = distinct_weights(rng, list.len());
    let edges = list
        .into_iter()
        .zip(weights)
        .map(|((u, v), w)| Edge::new(u, v, w))
        .collect();
    WeightedGraph::new(n, edges).expect("generated graph is simple")
}

/// Random graph where each edge is present independently with probability
/// `p`; may be disconnected.
pub fn random_gnp<R: Rng>(rng: &mut R, n: usize, p: f64) -> WeightedGraph {
    let mut list = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                list.push((u, v));
            }
        }
    }
    let weights = distinct_weights(rng, list.len());
    let edges = list
        .into_iter()
        .zip(weights)
        .map(|((u, v), w)| Edge::new(u, v, w))
        .collect();
    WeightedGraph::new(n, edges).expect("generated graph is simple")
}

/// Star with center 0 and `leaves` leaves, all edges of weight `w`.
pub fn star(leaves: usize, w: f64) -> WeightedGraph {
    let edges = (1..=leaves).map(|v| Edge::new(0, v, w)).collect();
    WeightedGraph::new(leaves + 1, edges).expect("star is simple")
}

/// Path `0 - 1 - ... - (n-1)` with the given weights.
pub fn path(weights: &[f64]) -> WeightedGraph {
    let edges = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Edge::new(i, i + 1, w))
        .collect();
    WeightedGraph::new(weights.len() + 1, edges).expect("path is simple")
}

/// `rows x cols` grid with random distinct weights.
pub fn grid<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> WeightedGraph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut list = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                list.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                list.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    let weights = distinct_weights(rng, list.len());
    let edges = list
        .into_iter()
        .zip(weights)
        .map(|((u, v), w)| Edge::new(u, v, w))
        .collect();
    WeightedGraph::new(rows * cols, edges).expect("grid is simple")
}
