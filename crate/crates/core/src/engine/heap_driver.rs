use std::collections::BinaryHeap;

use crate::graph::WeightedGraph;
use crate::heap::NeighborHeap;
use crate::linkage::Linkage;

use super::{ClusterState, EngineError, GlobalEntry, HacOptions, HacOutput, RunStats};

/// Global-heap driver over neighbor heaps of type `H`.
///
/// Entries are validated lazily on extraction: an entry is used only if both
/// ends are active and the stored weight is unchanged. Otherwise the owner's
/// current best edge is reinserted.
pub fn heap_hac_with<H: NeighborHeap<f64>>(
    graph: &WeightedGraph,
    kind: Linkage,
    opts: &HacOptions,
) -> Result<HacOutput, EngineError> {
    let mut state: ClusterState<H> = ClusterState::new(graph, kind, opts.seed)?;
    let n = graph.num_vertices();
    let m = graph.num_edges();
    let mut stats = RunStats::default();
    let mut global = BinaryHeap::with_capacity(n);

    for u in 0..n {
        push_best(&state, u, &mut global, &mut stats);
    }
    while let Some(GlobalEntry { w, u, v }) = global.pop() {
        if !state.is_active(u) {
            stats.stale_pops += 1;
            continue;
        }
        let valid = state.is_active(v)
            && state.weight(u, v).is_some_and(|cur| cur.to_bits() == w.to_bits());
        if !valid {
            stats.stale_pops += 1;
            push_best(&state, u, &mut global, &mut stats);
            continue;
        }
        let x = state.merge_clusters(u, v)?;
        if opts.audit {
            state.audit(n, m)?;
            stats.audits += 1;
        }
        push_best(&state, x, &mut global, &mut stats);
    }
    let (dendrogram, degrees) = state.into_parts();
    stats.merge_degrees = degrees;
    Ok(HacOutput {
        dendrogram,
        stats,
        orientation: None,
    })
}

fn push_best<H: NeighborHeap<f64>>(
    state: &ClusterState<H>,
    u: usize,
    global: &mut BinaryHeap<GlobalEntry>,
    stats: &mut RunStats,
) {
    stats.best_edge_calls += 1;
    if let Some((v, w)) = state.best_edge(u) {
        global.push(GlobalEntry { w, u, v });
    }
}
