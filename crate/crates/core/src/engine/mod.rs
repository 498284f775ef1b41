//! The generic clustering framework for triangle-based linkages.
//!
//! [`ClusterState`] holds one neighbor heap per live cluster. Clusters live
//! in slots `0..n`; merging folds the lower-degree cluster into the other
//! one, whose slot survives. Two drivers pick merges: [`chain_hac`] follows
//! chains of best neighbors, [`heap_hac`] keeps a global heap of best edges.

mod chain;
mod heap_driver;

use std::cmp::Ordering;

use log::debug;
use thiserror::Error;

use crate::dendrogram::Dendrogram;
use crate::graph::WeightedGraph;
use crate::heap::{ClusterId, HeapImpl, MeldHeap, NeighborHeap, TreeHeap};
use crate::linkage::Linkage;
use crate::orientation::OrientEvent;

pub use chain::chain_hac_with;
pub use heap_driver::heap_hac_with;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("linkage {0} is not triangle-based; use the average-linkage engines")]
    NotTriangleBased(Linkage),
    #[error("cluster {0} is not active")]
    Inactive(ClusterId),
    #[error("clusters {0} and {1} are not adjacent")]
    MissingEdge(ClusterId, ClusterId),
    #[error("epsilon must lie in [0, 1), got {0}")]
    Epsilon(f64),
    #[error("orientation: {0}")]
    Orientation(String),
    #[error("audit failed: {0}")]
    Audit(String),
}

/// Knobs shared by all engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HacOptions {
    pub heap: HeapImpl,
    /// Seeds hashing in the meldable representation.
    pub seed: u64,
    /// Runs full invariant scans after every merge.
    pub audit: bool,
    /// Outdegree cap for the exact average engine; `None` picks the default.
    pub delta_cap: Option<usize>,
    /// Keeps the orientation event log of the exact average engine.
    pub trace_orientation: bool,
}

impl Default for HacOptions {
    fn default() -> Self {
        HacOptions {
            heap: HeapImpl::Tree,
            seed: 0,
            audit: false,
            delta_cap: None,
            trace_orientation: false,
        }
    }
}

/// Counters collected during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    /// Degrees `(d(u), d(v))` of the two clusters at every merge.
    pub merge_degrees: Vec<(usize, usize)>,
    pub best_edge_calls: u64,
    /// Chain driver only.
    pub stack_pushes: u64,
    /// Heap driver only: popped global entries that failed validation.
    pub stale_pops: u64,
    /// Approximate engine only: rebuilds per slot.
    pub rebuilds: Vec<u32>,
    /// Exact average engine only.
    pub flips: u64,
    pub max_outdegree: usize,
    pub outdegree_cap: usize,
    /// Number of invariant scans performed (audit mode).
    pub audits: u64,
}

impl RunStats {
    /// Sum over merges of the smaller degree.
    pub fn merge_cost(&self) -> u64 {
        merge_cost(&self.merge_degrees)
    }
}

#[derive(Debug, Clone)]
pub struct HacOutput {
    pub dendrogram: Dendrogram,
    pub stats: RunStats,
    /// Exact average engine with `trace_orientation` only.
    pub orientation: Option<OrientationTrace>,
}

/// Event log and final state of the orientation used by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationTrace {
    pub events: Vec<OrientEvent>,
    /// Final `(tail, head)` edges, sorted.
    pub edges: Vec<(usize, usize)>,
}

/// `sum min(d(u), d(v))` over a merge trace.
pub fn merge_cost(trace: &[(usize, usize)]) -> u64 {
    trace.iter().map(|&(a, b)| a.min(b) as u64).sum()
}

/// Upper bound `2m (log2(2m) + 1)` on the merge cost of any run.
pub fn merge_cost_bound(m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let two_m = 2.0 * m as f64;
    two_m * (two_m.log2() + 1.0)
}

/// Picks `(folded, survivor)`: the lower-degree cluster is folded; on equal
/// degree the smaller id is folded into the larger.
#[inline]
pub(crate) fn fold_order(a: ClusterId, da: usize, b: ClusterId, db: usize) -> (ClusterId, ClusterId) {
    match da.cmp(&db) {
        Ordering::Less => (a, b),
        Ordering::Greater => (b, a),
        Ordering::Equal => (a.min(b), a.max(b)),
    }
}

/// Live clustering state for triangle-based linkages.
#[derive(Debug, Clone)]
pub struct ClusterState<H> {
    kind: Linkage,
    seed: u64,
    active: Vec<bool>,
    size: Vec<usize>,
    heaps: Vec<H>,
    /// Current dendrogram node of every slot.
    node: Vec<usize>,
    /// Smallest vertex in every cluster; orders merge records.
    min_leaf: Vec<usize>,
    /// Sum of original degrees of the vertices in every cluster.
    total_edges: Vec<usize>,
    num_active: usize,
    dendrogram: Dendrogram,
    merge_degrees: Vec<(usize, usize)>,
}

impl<H: NeighborHeap<f64>> ClusterState<H> {
    pub fn new(graph: &WeightedGraph, kind: Linkage, seed: u64) -> Result<Self, EngineError> {
        if !kind.is_triangle_based() {
            return Err(EngineError::NotTriangleBased(kind));
        }
        let n = graph.num_vertices();
        if n == 0 {
            return Err(EngineError::EmptyGraph);
        }
        let mut heaps: Vec<H> = (0..n).map(|_| H::with_seed(seed)).collect();
        for e in graph.edges() {
            heaps[e.u].insert(e.v, e.w).expect("simple graph");
            heaps[e.v].insert(e.u, e.w).expect("simple graph");
        }
        Ok(ClusterState {
            kind,
            seed,
            active: vec![true; n],
            size: vec![1; n],
            heaps,
            node: (0..n).collect(),
            min_leaf: (0..n).collect(),
            total_edges: graph.degrees(),
            num_active: n,
            dendrogram: Dendrogram::new(n),
            merge_degrees: Vec::new(),
        })
    }

    pub fn num_slots(&self) -> usize {
        self.active.len()
    }

    pub fn num_active(&self) -> usize {
        self.num_active
    }

    pub fn is_active(&self, c: ClusterId) -> bool {
        self.active[c]
    }

    pub fn size(&self, c: ClusterId) -> usize {
        self.size[c]
    }

    pub fn degree(&self, c: ClusterId) -> usize {
        self.heaps[c].len()
    }

    pub fn heap(&self, c: ClusterId) -> &H {
        &self.heaps[c]
    }

    pub fn weight(&self, a: ClusterId, b: ClusterId) -> Option<f64> {
        self.heaps[a].get(b).copied()
    }

    pub fn best_edge(&self, c: ClusterId) -> Option<(ClusterId, f64)> {
        self.heaps[c].best_edge().ok()
    }

    pub fn dendrogram(&self) -> &Dendrogram {
        &self.dendrogram
    }

    pub fn merge_degrees(&self) -> &[(usize, usize)] {
        &self.merge_degrees
    }

    pub fn total_edges(&self, c: ClusterId) -> usize {
        self.total_edges[c]
    }

    /// Merges clusters `a` and `b` and returns the surviving slot.
    pub fn merge_clusters(&mut self, a: ClusterId, b: ClusterId) -> Result<ClusterId, EngineError> {
        for c in [a, b] {
            if c >= self.active.len() || !self.active[c] {
                return Err(EngineError::Inactive(c));
            }
        }
        let (da, db) = (self.degree(a), self.degree(b));
        let weight = match (self.heaps[a].get(b), self.heaps[b].get(a)) {
            (Some(&w), Some(_)) => w,
            _ => return Err(EngineError::MissingEdge(a, b)),
        };
        let (fold, keep) = fold_order(a, da, b, db);
        self.merge_degrees.push((da, db));

        self.heaps[fold].remove(keep).expect("edge checked");
        self.heaps[keep].remove(fold).expect("edge checked");
        let folded = std::mem::replace(&mut self.heaps[fold], H::with_seed(self.seed));
        let neighbors = folded.keys();
        let kind = self.kind;
        let combine = |_: ClusterId, x: &f64, y: &f64| kind.combine(*x, *y);
        self.heaps[keep].union_with(folded, combine);
        for c in neighbors {
            self.heaps[c]
                .relabel(fold, keep, combine)
                .expect("mirror invariant");
        }

        self.active[fold] = false;
        self.num_active -= 1;
        self.size[keep] += self.size[fold];
        self.total_edges[keep] += self.total_edges[fold];
        let (first, second) = if self.min_leaf[a] < self.min_leaf[b] { (a, b) } else { (b, a) };
        let id = self
            .dendrogram
            .push(self.node[first], self.node[second], weight);
        self.node[keep] = id;
        self.min_leaf[keep] = self.min_leaf[first];
        debug!("merge {a} + {b} -> slot {keep} (node {id}) at {weight}");
        Ok(keep)
    }

    /// Full scan of the state invariants: mirrored heaps, size and degree
    /// totals, no self keys.
    pub fn audit(&self, n_vertices: usize, m_edges: usize) -> Result<(), EngineError> {
        let fail = |msg: String| Err(EngineError::Audit(msg));
        let mut sizes = 0;
        let mut degrees = 0;
        for a in 0..self.active.len() {
            if !self.active[a] {
                if !self.heaps[a].is_empty() {
                    return fail(format!("inactive cluster {a} has a non-empty heap"));
                }
                continue;
            }
            sizes += self.size[a];
            degrees += self.total_edges[a];
            for (k, w) in self.heaps[a].entries() {
                if k == a {
                    return fail(format!("cluster {a} lists itself"));
                }
                if !self.active[k] {
                    return fail(format!("cluster {a} lists inactive {k}"));
                }
                match self.heaps[k].get(a) {
                    Some(&w2) if w2.to_bits() == w.to_bits() => {}
                    other => {
                        return fail(format!(
                            "heap({a})[{k}] = {w} but heap({k})[{a}] = {other:?}"
                        ))
                    }
                }
            }
        }
        if sizes != n_vertices {
            return fail(format!("active sizes sum to {sizes}, expected {n_vertices}"));
        }
        if degrees != 2 * m_edges {
            return fail(format!("total edges sum to {degrees}, expected {}", 2 * m_edges));
        }
        Ok(())
    }

    pub(crate) fn into_parts(self) -> (Dendrogram, Vec<(usize, usize)>) {
        (self.dendrogram, self.merge_degrees)
    }
}

/// Chain-based driver for a triangle-based linkage.
pub fn chain_hac(
    graph: &WeightedGraph,
    kind: Linkage,
    opts: &HacOptions,
) -> Result<HacOutput, EngineError> {
    match opts.heap {
        HeapImpl::Tree => chain_hac_with::<TreeHeap<f64>>(graph, kind, opts),
        HeapImpl::Meld => chain_hac_with::<MeldHeap<f64>>(graph, kind, opts),
    }
}

/// Heap-based driver for a triangle-based linkage.
pub fn heap_hac(
    graph: &WeightedGraph,
    kind: Linkage,
    opts: &HacOptions,
) -> Result<HacOutput, EngineError> {
    match opts.heap {
        HeapImpl::Tree => heap_hac_with::<TreeHeap<f64>>(graph, kind, opts),
        HeapImpl::Meld => heap_hac_with::<MeldHeap<f64>>(graph, kind, opts),
    }
}

/// Entry of a global max-heap of edges: larger weight first, then smaller
/// `u`, then smaller `v`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GlobalEntry {
    pub w: f64,
    pub u: ClusterId,
    pub v: ClusterId,
}

impl PartialEq for GlobalEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for GlobalEntry {}

impl PartialOrd for GlobalEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GlobalEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.w
            .total_cmp(&other.w)
            .then(other.u.cmp(&self.u))
            .then(other.v.cmp(&self.v))
    }
}
