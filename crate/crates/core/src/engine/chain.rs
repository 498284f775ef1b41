use crate::graph::WeightedGraph;
use crate::heap::NeighborHeap;
use crate::linkage::Linkage;

use super::{ClusterState, EngineError, HacOptions, HacOutput, RunStats};

/// Nearest-neighbor chain over neighbor heaps of type `H`.
pub fn chain_hac_with<H: NeighborHeap<f64>>(
    graph: &WeightedGraph,
    kind: Linkage,
    opts: &HacOptions,
) -> Result<HacOutput, EngineError> {
    let mut state: ClusterState<H> = ClusterState::new(graph, kind, opts.seed)?;
    let n = graph.num_vertices();
    let m = graph.num_edges();
    let mut stats = RunStats::default();
    let mut stack: Vec<usize> = Vec::new();
    let mut on_stack = vec![false; n];

    for v in 0..n {
        if !state.is_active(v) {
            continue;
        }
        stack.push(v);
        on_stack[v] = true;
        stats.stack_pushes += 1;
        while let Some(&t) = stack.last() {
            stats.best_edge_calls += 1;
            let Some((b, _)) = state.best_edge(t) else {
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
            debug_assert_eq!(s, b, "best neighbor on the stack must be directly below");
            on_stack[t] = false;
            on_stack[s] = false;
            let x = state.merge_clusters(t, s)?;
            if opts.audit {
                state.audit(n, m)?;
                stats.audits += 1;
            }
            if stack.is_empty() && state.degree(x) > 0 {
                stack.push(x);
                on_stack[x] = true;
                stats.stack_pushes += 1;
            }
        }
    }
    debug_assert!((stats.stack_pushes as usize) < 2 * n);
    let (dendrogram, degrees) = state.into_parts();
    stats.merge_degrees = degrees;
    Ok(HacOutput {
        dendrogram,
        stats,
        orientation: None,
    })
}
