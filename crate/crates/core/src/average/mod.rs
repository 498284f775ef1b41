//! Average linkage (UPGMA) on graphs.
//!
//! Three engines share the same merge bookkeeping:
//!
//! * [`naive_avg_hac`]: global heap, every incident weight renormalized after
//!   each merge. Slow but simple; used as the oracle.
//! * [`exact_avg_hac`]: nearest-neighbor chain. Only in-edges of a
//!   low-outdegree orientation are kept current; out-edges are refreshed
//!   right before a best-edge query.
//! * [`approx_avg_hac`]: global heap with size snapshots. A cluster's edges
//!   are rewritten only when it has grown by a `1 + delta` factor since the
//!   last rewrite, which keeps every merge within `1 - eps` of the maximum.
//!
//! Neighbor heaps hold [`AvgEntry`] values: the raw cut sum plus the neighbor
//! size used when the entry was last normalized. The owner's own size is
//! divided out uniformly, so it never has to be stored.

mod approx;
mod exact;
mod naive;

use std::collections::HashMap;

use log::debug;

use crate::dendrogram::Dendrogram;
use crate::engine::{fold_order, EngineError};
use crate::graph::WeightedGraph;
use crate::heap::{ClusterId, HeapValue, NeighborHeap};

pub use approx::{approx_avg_hac, delta_for_epsilon, exact_heap_avg_hac, max_rebuilds};
pub use exact::exact_avg_hac;
pub use naive::naive_avg_hac;

/// Neighbor-heap value for average linkage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvgEntry {
    /// Sum of original edge weights across the cut.
    pub cut_sum: f64,
    /// Neighbor size used for the stored priority.
    pub norm_nbr: usize,
}

impl AvgEntry {
    pub fn new(cut_sum: f64, norm_nbr: usize) -> Self {
        AvgEntry { cut_sum, norm_nbr }
    }
}

impl HeapValue for AvgEntry {
    #[inline]
    fn priority(&self) -> f64 {
        self.cut_sum / self.norm_nbr as f64
    }
}

/// What a merge did, for the engine-specific follow-up work.
#[derive(Debug, Clone)]
pub(crate) struct MergeInfo {
    pub keep: ClusterId,
    /// Neighbors the folded cluster had besides the survivor.
    pub moved: Vec<ClusterId>,
}

/// Cluster bookkeeping shared by the average engines.
#[derive(Debug, Clone)]
pub(crate) struct AvgCore<H> {
    seed: u64,
    pub active: Vec<bool>,
    pub size: Vec<usize>,
    pub heaps: Vec<H>,
    node: Vec<usize>,
    min_leaf: Vec<usize>,
    /// Folded slot -> survivor; roots are active slots.
    parent: Vec<usize>,
    dendrogram: Dendrogram,
    merge_degrees: Vec<(usize, usize)>,
}

impl<H: NeighborHeap<AvgEntry>> AvgCore<H> {
    pub fn new(graph: &WeightedGraph, seed: u64) -> Result<Self, EngineError> {
        let n = graph.num_vertices();
        if n == 0 {
            return Err(EngineError::EmptyGraph);
        }
        let mut heaps: Vec<H> = (0..n).map(|_| H::with_seed(seed)).collect();
        for e in graph.edges() {
            heaps[e.u].insert(e.v, AvgEntry::new(e.w, 1)).expect("simple graph");
            heaps[e.v].insert(e.u, AvgEntry::new(e.w, 1)).expect("simple graph");
        }
        Ok(AvgCore {
            seed,
            active: vec![true; n],
            size: vec![1; n],
            heaps,
            node: (0..n).collect(),
            min_leaf: (0..n).collect(),
            parent: (0..n).collect(),
            dendrogram: Dendrogram::new(n),
            merge_degrees: Vec::new(),
        })
    }

    pub fn degree(&self, c: ClusterId) -> usize {
        self.heaps[c].len()
    }

    pub fn cut(&self, a: ClusterId, b: ClusterId) -> Option<f64> {
        self.heaps[a].get(b).map(|e| e.cut_sum)
    }

    /// True average-linkage similarity between two adjacent clusters.
    pub fn true_weight(&self, a: ClusterId, b: ClusterId) -> Option<f64> {
        let c = self.cut(a, b)?;
        Some(c / (self.size[a] as f64 * self.size[b] as f64))
    }

    /// Renormalizes `heap(a)[b]` with the current size of `b`.
    pub fn refresh(&mut self, a: ClusterId, b: ClusterId) {
        let size_b = self.size[b];
        if let Some(&e) = self.heaps[a].get(b) {
            if e.norm_nbr != size_b {
                self.heaps[a]
                    .update(b, AvgEntry::new(e.cut_sum, size_b))
                    .expect("key checked present");
            }
        }
    }

    /// Merges `a` and `b`. Cut sums of shared neighbors are added. Every
    /// entry touched through the folded side is renormalized with current
    /// sizes, in the survivor's heap and in the neighbors' heaps.
    pub fn merge(&mut self, a: ClusterId, b: ClusterId) -> Result<MergeInfo, EngineError> {
        for c in [a, b] {
            if c >= self.active.len() || !self.active[c] {
                return Err(EngineError::Inactive(c));
            }
        }
        let weight = self.true_weight(a, b).ok_or(EngineError::MissingEdge(a, b))?;
        let (da, db) = (self.degree(a), self.degree(b));
        let (fold, keep) = fold_order(a, da, b, db);
        self.merge_degrees.push((da, db));

        self.heaps[fold].remove(keep).expect("edge checked");
        self.heaps[keep].remove(fold).expect("edge checked");
        let folded = std::mem::replace(&mut self.heaps[fold], H::with_seed(self.seed));
        let moved = folded.keys();
        self.size[keep] += self.size[fold];
        let size = &self.size;
        self.heaps[keep].union_with(folded, |x, p, q| {
            AvgEntry::new(p.cut_sum + q.cut_sum, size[x])
        });
        let size_keep = self.size[keep];
        for &x in &moved {
            self.refresh(keep, x);
            let heap = &mut self.heaps[x];
            heap.relabel(fold, keep, |_, p, q| AvgEntry::new(p.cut_sum + q.cut_sum, size_keep))
                .expect("mirror invariant");
            let cut = heap.get(keep).expect("just relabeled").cut_sum;
            heap.update(keep, AvgEntry::new(cut, size_keep)).expect("present");
        }

        self.active[fold] = false;
        self.parent[fold] = keep;
        let (first, second) = if self.min_leaf[a] < self.min_leaf[b] { (a, b) } else { (b, a) };
        let id = self
            .dendrogram
            .push(self.node[first], self.node[second], weight);
        self.node[keep] = id;
        self.min_leaf[keep] = self.min_leaf[first];
        debug!("avg merge {a} + {b} -> slot {keep} (node {id}) at {weight}");
        Ok(MergeInfo { keep, moved })
    }

    fn root(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    /// Cut sums between active clusters recomputed from the input graph.
    pub fn true_cuts(&self, graph: &WeightedGraph) -> HashMap<(usize, usize), f64> {
        let mut cuts = HashMap::new();
        for e in graph.edges() {
            let (ru, rv) = (self.root(e.u), self.root(e.v));
            if ru != rv {
                *cuts.entry((ru.min(rv), ru.max(rv))).or_insert(0.0) += e.w;
            }
        }
        cuts
    }

    /// Checks mirrored adjacency, sizes, and stored cut sums against the
    /// recomputed ones. Returns the recomputed cuts for further checks.
    pub fn audit(&self, graph: &WeightedGraph) -> Result<HashMap<(usize, usize), f64>, EngineError> {
        let fail = |msg: String| Err(EngineError::Audit(msg));
        let cuts = self.true_cuts(graph);
        let mut total = 0;
        let mut listed = 0;
        for a in 0..self.active.len() {
            if !self.active[a] {
                if !self.heaps[a].is_empty() {
                    return fail(format!("inactive cluster {a} has a non-empty heap"));
                }
                continue;
            }
            total += self.size[a];
            for (x, e) in self.heaps[a].entries() {
                if x == a || !self.active[x] {
                    return fail(format!("cluster {a} lists {x}"));
                }
                let mirror = self.heaps[x].get(a).map(|m| m.cut_sum);
                if mirror.map(f64::to_bits) != Some(e.cut_sum.to_bits()) {
                    return fail(format!("cut({a}, {x}) = {} but mirror {mirror:?}", e.cut_sum));
                }
                let truth = cuts.get(&(a.min(x), a.max(x))).copied().unwrap_or(0.0);
                if !crate::dendrogram::rel_close(e.cut_sum, truth, 1e-9) {
                    return fail(format!("cut({a}, {x}) = {} but true cut {truth}", e.cut_sum));
                }
                listed += 1;
            }
        }
        if total != graph.num_vertices() {
            return fail(format!("active sizes sum to {total}"));
        }
        if listed != 2 * cuts.len() {
            return fail(format!("{listed} heap entries for {} adjacent pairs", cuts.len()));
        }
        Ok(cuts)
    }

    pub fn into_parts(self) -> (Dendrogram, Vec<(usize, usize)>) {
        (self.dendrogram, self.merge_degrees)
    }
}
