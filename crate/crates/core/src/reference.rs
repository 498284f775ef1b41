//! Quadratic reference implementations on dense matrices.
//!
//! Every step rescans all active pairs, so these are only meant for small
//! inputs. They share no code with the engines and serve as test oracles.

use crate::dendrogram::Dendrogram;
use crate::graph::WeightedGraph;
use crate::linkage::Linkage;

/// Dense clustering state: pairwise weights (triangle linkages) or cut sums
/// (average linkage) between active clusters.
#[derive(Debug, Clone)]
pub struct DenseState {
    kind: Linkage,
    n: usize,
    /// Weight or cut sum; `None` when the clusters are not adjacent.
    cell: Vec<Option<f64>>,
    size: Vec<usize>,
    active: Vec<bool>,
    node: Vec<usize>,
    min_leaf: Vec<usize>,
    dendrogram: Dendrogram,
}

impl DenseState {
    pub fn new(graph: &WeightedGraph, kind: Linkage) -> Self {
        let n = graph.num_vertices();
        let mut cell = vec![None; n * n];
        for e in graph.edges() {
            cell[e.u * n + e.v] = Some(e.w);
            cell[e.v * n + e.u] = Some(e.w);
        }
        DenseState {
            kind,
            n,
            cell,
            size: vec![1; n],
            active: vec![true; n],
            node: (0..n).collect(),
            min_leaf: (0..n).collect(),
            dendrogram: Dendrogram::new(n),
        }
    }

    pub fn is_active(&self, a: usize) -> bool {
        self.active[a]
    }

    pub fn size(&self, a: usize) -> usize {
        self.size[a]
    }

    /// Current dendrogram node held by slot `a`.
    pub fn node(&self, a: usize) -> usize {
        self.node[a]
    }

    /// Linkage similarity between two active clusters.
    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        let c = self.cell[a * self.n + b]?;
        Some(if self.kind.is_average() {
            c / (self.size[a] as f64 * self.size[b] as f64)
        } else {
            c
        })
    }

    /// Raw cut sum between two clusters (average linkage only).
    pub fn cut(&self, a: usize, b: usize) -> Option<f64> {
        self.cell[a * self.n + b]
    }

    /// Heaviest active pair `(a, b, w)` with `a < b`; ties go to the
    /// lexicographically smallest pair.
    pub fn max_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..self.n {
            if !self.active[a] {
                continue;
            }
            for b in a + 1..self.n {
                if !self.active[b] {
                    continue;
                }
                if let Some(w) = self.weight(a, b) {
                    if best.is_none_or(|(_, _, bw)| w > bw) {
                        best = Some((a, b, w));
                    }
                }
            }
        }
        best
    }

    /// Merges two active adjacent clusters into slot `min(a, b)`.
    pub fn merge(&mut self, a: usize, b: usize) -> Option<usize> {
        if a == b || !self.active[a] || !self.active[b] {
            return None;
        }
        let w = self.weight(a, b)?;
        let (keep, gone) = (a.min(b), a.max(b));
        let n = self.n;
        for k in 0..n {
            if !self.active[k] || k == keep || k == gone {
                continue;
            }
            let x = self.cell[keep * n + k];
            let y = self.cell[gone * n + k];
            let merged = match (x, y) {
                (Some(x), Some(y)) => Some(if self.kind.is_average() {
                    x + y
                } else {
                    self.kind.combine(x, y)
                }),
                (x, y) => x.or(y),
            };
            self.cell[keep * n + k] = merged;
            self.cell[k * n + keep] = merged;
            self.cell[gone * n + k] = None;
            self.cell[k * n + gone] = None;
        }
        self.cell[keep * n + gone] = None;
        self.cell[gone * n + keep] = None;
        self.active[gone] = false;
        self.size[keep] += self.size[gone];
        let (first, second) = if self.min_leaf[a] < self.min_leaf[b] { (a, b) } else { (b, a) };
        let id = self.dendrogram.push(self.node[first], self.node[second], w);
        self.min_leaf[keep] = self.min_leaf[first];
        self.node[keep] = id;
        Some(keep)
    }

    pub fn dendrogram(&self) -> &Dendrogram {
        &self.dendrogram
    }

    pub fn into_dendrogram(self) -> Dendrogram {
        self.dendrogram
    }
}

/// Exact HAC by full rescans: always merges the globally heaviest pair.
pub fn reference_hac(graph: &WeightedGraph, kind: Linkage) -> Dendrogram {
    let kind = if kind == Linkage::AvgApprox {
        Linkage::AvgExact
    } else {
        kind
    };
    let mut state = DenseState::new(graph, kind);
    while let Some((a, b, _)) = state.max_pair() {
        state.merge(a, b);
    }
    state.into_dendrogram()
}
