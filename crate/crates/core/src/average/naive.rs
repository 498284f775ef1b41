use std::collections::{BTreeMap, BTreeSet};

use crate::dendrogram::Dendrogram;
use crate::engine::{fold_order, EngineError, GlobalEntry, HacOutput, RunStats};
use crate::graph::WeightedGraph;

/// Eager UPGMA: after every merge, all weights incident to the new cluster
/// are recomputed, and every affected cluster's best edge is rescanned.
///
/// Independent of the neighbor-heap machinery: adjacency is a plain ordered
/// map of cut sums per cluster, and the global structure holds exactly one
/// entry per cluster with neighbors.
pub fn naive_avg_hac(graph: &WeightedGraph) -> Result<HacOutput, EngineError> {
    let n = graph.num_vertices();
    if n == 0 {
        return Err(EngineError::EmptyGraph);
    }
    let mut st = Naive {
        adj: vec![BTreeMap::new(); n],
        size: vec![1; n],
        best: vec![None; n],
        global: BTreeSet::new(),
    };
    for e in graph.edges() {
        st.adj[e.u].insert(e.v, e.w);
        st.adj[e.v].insert(e.u, e.w);
    }
    for u in 0..n {
        st.rescan(u);
    }
    let mut node: Vec<usize> = (0..n).collect();
    let mut min_leaf: Vec<usize> = (0..n).collect();
    let mut dendrogram = Dendrogram::new(n);
    let mut stats = RunStats::default();

    while let Some(&GlobalEntry { w, u, v }) = st.global.last() {
        let (du, dv) = (st.adj[u].len(), st.adj[v].len());
        stats.merge_degrees.push((du, dv));
        let (fold, keep) = fold_order(u, du, v, dv);
        st.set_best(fold, None);
        let folded = std::mem::take(&mut st.adj[fold]);
        st.adj[keep].remove(&fold);
        for (&x, &c) in &folded {
            if x == keep {
                continue;
            }
            st.adj[x].remove(&fold);
            *st.adj[keep].entry(x).or_insert(0.0) += c;
        }
        st.size[keep] += st.size[fold];

        let (first, second) = if min_leaf[u] < min_leaf[v] { (u, v) } else { (v, u) };
        let id = dendrogram.push(node[first], node[second], w);
        node[keep] = id;
        min_leaf[keep] = min_leaf[first];

        let neighbors: Vec<(usize, f64)> = st.adj[keep].iter().map(|(&x, &c)| (x, c)).collect();
        for (x, c) in neighbors {
            st.adj[x].insert(keep, c);
            st.rescan(x);
        }
        st.rescan(keep);
        stats.best_edge_calls += 1;
    }
    Ok(HacOutput {
        dendrogram,
        stats,
        orientation: None,
    })
}

struct Naive {
    adj: Vec<BTreeMap<usize, f64>>,
    size: Vec<usize>,
    best: Vec<Option<GlobalEntry>>,
    global: BTreeSet<GlobalEntry>,
}

impl Naive {
    fn set_best(&mut self, u: usize, entry: Option<GlobalEntry>) {
        if let Some(old) = self.best[u].take() {
            self.global.remove(&old);
        }
        if let Some(e) = entry {
            self.global.insert(e);
        }
        self.best[u] = entry;
    }

    /// Recomputes `u`'s heaviest edge (ties: smaller neighbor) by a scan.
    fn rescan(&mut self, u: usize) {
        let su = self.size[u] as f64;
        let mut best: Option<GlobalEntry> = None;
        for (&x, &c) in &self.adj[u] {
            let w = c / (su * self.size[x] as f64);
            if best.is_none_or(|b| w > b.w) {
                best = Some(GlobalEntry { w, u, v: x });
            }
        }
        self.set_best(u, best);
    }
}
