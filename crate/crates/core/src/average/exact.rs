use crate::engine::{fold_order, EngineError, HacOptions, HacOutput, OrientationTrace, RunStats};
use crate::graph::WeightedGraph;
use crate::heap::{ClusterId, HeapImpl, MeldHeap, NeighborHeap, TreeHeap};
use crate::orientation::{default_cap, Orientation, OrientationError};

use super::{AvgCore, AvgEntry};

fn orient_err(e: OrientationError) -> EngineError {
    EngineError::Orientation(e.to_string())
}

/// Exact UPGMA by nearest-neighbor chain.
///
/// Every edge of the current graph is oriented with outdegree at most
/// `opts.delta_cap` (default [`default_cap`] of the edge count). Entries for
/// in-edges are kept at their true value; the at most `cap` out-edges of a
/// cluster are renormalized before each best-edge query on it.
pub fn exact_avg_hac(graph: &WeightedGraph, opts: &HacOptions) -> Result<HacOutput, EngineError> {
    match opts.heap {
        HeapImpl::Tree => run::<TreeHeap<AvgEntry>>(graph, opts),
        HeapImpl::Meld => run::<MeldHeap<AvgEntry>>(graph, opts),
    }
}

struct Exact<H> {
    core: AvgCore<H>,
    orient: Orientation,
}

impl<H: NeighborHeap<AvgEntry>> Exact<H> {
    fn refresh_out_edges(&mut self, a: ClusterId) {
        for &b in self.orient.out_neighbors(a) {
            self.core.refresh(a, b);
        }
    }

    /// Moves every orientation edge of `fold` onto `keep` and returns the
    /// reversals as `(new_head, new_tail)`. An edge to a common neighbor is
    /// dropped; the existing one to `keep` stands for the contracted pair.
    fn update_orientation(
        &mut self,
        fold: ClusterId,
        keep: ClusterId,
    ) -> Result<Vec<(ClusterId, ClusterId)>, EngineError> {
        let neighbors = self.core.heaps[fold].keys();
        for &x in &neighbors {
            self.orient.delete_edge(fold, x).map_err(orient_err)?;
        }
        let mut flips = Vec::new();
        for &x in &neighbors {
            if x == keep || self.orient.has_edge(x, keep) {
                continue;
            }
            self.orient
                .insert_edge(x, keep, |old_tail, old_head| flips.push((old_tail, old_head)))
                .map_err(orient_err)?;
        }
        Ok(flips)
    }

    /// After a reversal `b -> a` the entry for `b` in `heap(a)` must be true.
    fn flip_edge(&mut self, a: ClusterId, b: ClusterId) {
        if self.core.active[a] && self.core.active[b] {
            self.core.refresh(a, b);
        }
    }

    fn merge(&mut self, a: ClusterId, b: ClusterId) -> Result<ClusterId, EngineError> {
        let (fold, keep) = fold_order(a, self.core.degree(a), b, self.core.degree(b));
        let flips = self.update_orientation(fold, keep)?;
        let info = self.core.merge(a, b)?;
        debug_assert_eq!(info.keep, keep);
        for (head, tail) in flips {
            self.flip_edge(head, tail);
        }
        for &y in self.orient.out_neighbors(keep) {
            self.core.refresh(y, keep);
        }
        Ok(keep)
    }

    /// Compares a refreshed best edge with a scan over true weights.
    fn check_best(&self, t: ClusterId, best: Option<(ClusterId, f64)>) -> Result<(), EngineError> {
        let scan = self
            .core
            .heaps[t]
            .keys()
            .into_iter()
            .filter_map(|x| self.core.true_weight(t, x))
            .fold(None, |m: Option<f64>, w| Some(m.map_or(w, |m| m.max(w))));
        let got = best.and_then(|(b, _)| self.core.true_weight(t, b));
        match (got, scan) {
            (None, None) => Ok(()),
            (Some(g), Some(s)) if crate::dendrogram::rel_close(g, s, 1e-12) => Ok(()),
            _ => Err(EngineError::Audit(format!(
                "best edge of {t} has weight {got:?}, scan found {scan:?}"
            ))),
        }
    }

    /// Checks the cap, that orientation and heaps agree, and that every
    /// in-edge entry is normalized with the tail's current size.
    fn audit(&self, graph: &WeightedGraph) -> Result<(), EngineError> {
        let fail = |msg: String| Err(EngineError::Audit(msg));
        let cuts = self.core.audit(graph)?;
        if self.orient.num_edges() != cuts.len() {
            return fail(format!(
                "orientation has {} edges, graph has {}",
                self.orient.num_edges(),
                cuts.len()
            ));
        }
        let cap = self.orient.cap();
        for (tail, head) in self.orient.directed_edges() {
            if self.orient.outdeg(tail) > cap {
                return fail(format!("outdegree of {tail} exceeds {cap}"));
            }
            let Some(e) = self.core.heaps[head].get(tail) else {
                return fail(format!("oriented edge {tail}->{head} missing from heaps"));
            };
            if e.norm_nbr != self.core.size[tail] {
                return fail(format!(
                    "in-edge {tail}->{head} normalized by {} but |{tail}| = {}",
                    e.norm_nbr, self.core.size[tail]
                ));
            }
        }
        Ok(())
    }
}

fn run<H: NeighborHeap<AvgEntry>>(
    graph: &WeightedGraph,
    opts: &HacOptions,
) -> Result<HacOutput, EngineError> {
    let core = AvgCore::<H>::new(graph, opts.seed)?;
    let n = graph.num_vertices();
    let cap = opts.delta_cap.unwrap_or_else(|| default_cap(graph.num_edges()));
    if cap == 0 {
        return Err(EngineError::Orientation("outdegree cap must be positive".into()));
    }
    let mut orient = Orientation::new(n, cap);
    if opts.trace_orientation {
        orient.enable_log();
    }
    // All sizes are 1, so every entry is already true and flips need no work.
    for e in graph.edges() {
        orient.insert_edge(e.u, e.v, |_, _| {}).map_err(orient_err)?;
    }
    let mut st = Exact { core, orient };
    let mut stats = RunStats::default();
    let mut stack: Vec<usize> = Vec::new();
    let mut on_stack = vec![false; n];

    for v in 0..n {
        if !st.core.active[v] {
            continue;
        }
        stack.push(v);
        on_stack[v] = true;
        stats.stack_pushes += 1;
        while let Some(&t) = stack.last() {
            st.refresh_out_edges(t);
            stats.best_edge_calls += 1;
            let best = st.core.heaps[t].best_edge();
            if opts.audit {
                st.check_best(t, best.ok())?;
            }
            let Ok((b, _)) = best else {
                stack.pop();
                on_stack[t] = false;
                continue;
            };
            if !on_stack[b] {
                stack.push(b);
                on_stack[b] = true;
                stats.stack_pushes += 1;
                continue;
            }
            stack.pop();
            let s = stack.pop().expect("reciprocal pair");
            debug_assert_eq!(s, b);
            on_stack[t] = false;
            on_stack[s] = false;
            let x = st.merge(t, s)?;
            if opts.audit {
                st.audit(graph)?;
                stats.audits += 1;
            }
            if stack.is_empty() && st.core.degree(x) > 0 {
                stack.push(x);
                on_stack[x] = true;
                stats.stack_pushes += 1;
            }
        }
    }
    stats.flips = st.orient.flips();
    stats.max_outdegree = st.orient.peak_outdegree();
    stats.outdegree_cap = cap;
    let orientation = st.orient.log().map(|events| OrientationTrace {
        events: events.to_vec(),
        edges: st.orient.directed_edges(),
    });
    let (dendrogram, degrees) = st.core.into_parts();
    stats.merge_degrees = degrees;
    Ok(HacOutput {
        dendrogram,
        stats,
        orientation,
    })
}
