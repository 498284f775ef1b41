use std::collections::BinaryHeap;

use crate::engine::{EngineError, GlobalEntry, HacOptions, HacOutput, RunStats};
use crate::graph::WeightedGraph;
use crate::heap::{ClusterId, HeapImpl, HeapValue, MeldHeap, NeighborHeap, TreeHeap};

use super::{AvgCore, AvgEntry};

/// Internal growth factor giving `eps`-closeness: `sqrt(1 / (1 - eps)) - 1`.
pub fn delta_for_epsilon(eps: f64) -> f64 {
    (1.0 / (1.0 - eps)).sqrt() - 1.0
}

/// Upper bound `ceil(log_{1+delta} n)` on rebuilds of one cluster.
pub fn max_rebuilds(n: usize, delta: f64) -> u32 {
    if n <= 1 {
        return 0;
    }
    if delta <= 0.0 {
        return (n - 1) as u32;
    }
    ((n as f64).ln() / delta.ln_1p()).ceil() as u32
}

/// `eps`-close UPGMA: every merge has true weight at least `1 - eps` times
/// the current maximum.
///
/// Each cluster `A` keeps a snapshot `S(A)` of its size. Entries of
/// `heap(A)` are divided by `S(A)` rather than `|A|`; once `|A|` reaches
/// `(1 + delta) S(A)` all edges of `A` are rewritten and `S(A)` reset.
pub fn approx_avg_hac(
    graph: &WeightedGraph,
    eps: f64,
    opts: &HacOptions,
) -> Result<HacOutput, EngineError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(EngineError::Epsilon(eps));
    }
    match opts.heap {
        HeapImpl::Tree => run::<TreeHeap<AvgEntry>>(graph, eps, opts),
        HeapImpl::Meld => run::<MeldHeap<AvgEntry>>(graph, eps, opts),
    }
}

/// Exact UPGMA on the global-heap driver: the approximate engine with
/// `eps = 0`, which rewrites the survivor's edges after every merge.
pub fn exact_heap_avg_hac(graph: &WeightedGraph, opts: &HacOptions) -> Result<HacOutput, EngineError> {
    approx_avg_hac(graph, 0.0, opts)
}

/// Global-heap entry tagged with the owner's push count; only the latest
/// entry of each cluster is live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Stamped {
    entry: GlobalEntry,
    stamp: std::cmp::Reverse<u64>,
}

struct Approx<H> {
    core: AvgCore<H>,
    stale: Vec<usize>,
    delta: f64,
    global: BinaryHeap<Stamped>,
    pushes: Vec<u64>,
}

impl<H: NeighborHeap<AvgEntry>> Approx<H> {
    /// Same arithmetic as `push_best`, so validation can compare bits.
    fn stored(&self, a: ClusterId, e: &AvgEntry) -> f64 {
        e.priority() / self.stale[a] as f64
    }

    fn push_best(&mut self, u: ClusterId, stats: &mut RunStats) {
        stats.best_edge_calls += 1;
        self.pushes[u] += 1;
        if let Ok((v, p)) = self.core.heaps[u].best_edge() {
            let w = p / self.stale[u] as f64;
            self.global.push(Stamped {
                entry: GlobalEntry { w, u, v },
                stamp: std::cmp::Reverse(self.pushes[u]),
            });
        }
    }

    fn needs_rebuild(&self, a: ClusterId) -> bool {
        self.core.size[a] as f64 >= (1.0 + self.delta) * self.stale[a] as f64
    }

    /// Writes true values for every edge of `a` on both sides.
    fn rebuild(&mut self, a: ClusterId, stats: &mut RunStats) {
        let size = &self.core.size;
        self.core.heaps[a].update_all(|x, e| e.norm_nbr = size[x]);
        let size_a = self.core.size[a];
        let neighbors = self.core.heaps[a].keys();
        for &x in &neighbors {
            let cut = self.core.heaps[a].get(x).expect("listed").cut_sum;
            self.core.heaps[x]
                .update(a, AvgEntry::new(cut, size_a))
                .expect("mirror invariant");
        }
        self.stale[a] = size_a;
        stats.rebuilds[a] += 1;
        for x in neighbors {
            self.push_best(x, stats);
        }
    }

    /// Sandwich `(1+delta)^-2 stored <= true <= stored` on every entry, plus
    /// the staleness invariant.
    fn audit(&self, graph: &WeightedGraph) -> Result<(), EngineError> {
        let cuts = self.core.audit(graph)?;
        let slack = 1e-9;
        let low = (1.0 + self.delta).powi(-2);
        for a in 0..self.stale.len() {
            if !self.core.active[a] {
                continue;
            }
            let (size_a, s_a) = (self.core.size[a], self.stale[a]);
            if size_a != s_a && size_a as f64 >= (1.0 + self.delta) * s_a as f64 {
                return Err(EngineError::Audit(format!(
                    "cluster {a} has size {size_a} but snapshot {s_a}"
                )));
            }
            for (x, e) in self.core.heaps[a].entries() {
                let stored = self.stored(a, &e);
                let cut = cuts[&(a.min(x), a.max(x))];
                let truth = cut / (size_a as f64 * self.core.size[x] as f64);
                if truth > stored * (1.0 + slack) || truth * (1.0 + slack) < low * stored {
                    return Err(EngineError::Audit(format!(
                        "edge ({a}, {x}): stored {stored}, true {truth}, delta {}",
                        self.delta
                    )));
                }
            }
        }
        Ok(())
    }
}

fn run<H: NeighborHeap<AvgEntry>>(
    graph: &WeightedGraph,
    eps: f64,
    opts: &HacOptions,
) -> Result<HacOutput, EngineError> {
    let core = AvgCore::<H>::new(graph, opts.seed)?;
    let n = graph.num_vertices();
    let mut st = Approx {
        core,
        stale: vec![1; n],
        delta: delta_for_epsilon(eps),
        global: BinaryHeap::with_capacity(n),
        pushes: vec![0; n],
    };
    let mut stats = RunStats {
        rebuilds: vec![0; n],
        ..RunStats::default()
    };
    for u in 0..n {
        st.push_best(u, &mut stats);
    }
    while let Some(Stamped { entry, stamp }) = st.global.pop() {
        let GlobalEntry { w, u, v } = entry;
        if !st.core.active[u] || stamp.0 != st.pushes[u] {
            stats.stale_pops += 1;
            continue;
        }
        let valid = st.core.active[v]
            && st.core.heaps[u]
                .get(v)
                .is_some_and(|e| st.stored(u, e).to_bits() == w.to_bits());
        if !valid {
            stats.stale_pops += 1;
            st.push_best(u, &mut stats);
            continue;
        }
        let info = st.core.merge(u, v)?;
        let keep = info.keep;
        if st.needs_rebuild(keep) {
            st.rebuild(keep, &mut stats);
        } else {
            for x in info.moved {
                st.push_best(x, &mut stats);
            }
        }
        st.push_best(keep, &mut stats);
        if opts.audit {
            st.audit(graph)?;
            stats.audits += 1;
        }
    }
    if opts.audit {
        let bound = max_rebuilds(n, st.delta);
        if let Some((slot, &count)) = stats.rebuilds.iter().enumerate().find(|(_, &c)| c > bound) {
            return Err(EngineError::Audit(format!(
                "slot {slot} rebuilt {count} times, bound {bound}"
            )));
        }
    }
    let (dendrogram, degrees) = st.core.into_parts();
    stats.merge_degrees = degrees;
    Ok(HacOutput {
        dendrogram,
        stats,
        orientation: None,
    })
}
