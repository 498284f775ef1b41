use std::io::Write;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graph_hac::average::{approx_avg_hac, exact_avg_hac, exact_heap_avg_hac, naive_avg_hac};
use graph_hac::dendrogram::Dendrogram;
use graph_hac::engine::{chain_hac, heap_hac, merge_cost_bound, HacOptions};
use graph_hac::evaluation::closeness_audit;
use graph_hac::generators::random_connected;
use graph_hac::graph::WeightedGraph;
use graph_hac::heap::HeapImpl;
use graph_hac::linkage::Linkage;
use graph_hac::orientation::replay;
use graph_hac::reference::reference_hac;

use crate::CliError;

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Random graphs per check.
    #[arg(long, default_value_t = 25)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

type Check = (&'static str, fn(&WeightedGraph, u64) -> Result<(), String>);

const CHECKS: &[Check] = &[
    ("single: chain, heap and reference agree", |g, s| triangle(g, s, Linkage::Single, true)),
    ("complete: chain, heap and reference agree", |g, s| triangle(g, s, Linkage::Complete, true)),
    // Graph WPGMA depends on merge order once edges are missing, so only the
    // heap driver, which follows the global order, is held to the reference.
    ("wpgma: heap and reference agree", |g, s| triangle(g, s, Linkage::Wpgma, false)),
    ("tree and meld heaps agree", tree_vs_meld),
    ("exact average matches the naive engine", exact_vs_naive),
    ("approximate average passes audit and closeness", approx_closeness),
];

fn same(a: &Dendrogram, b: &Dendrogram) -> Result<(), String> {
    a.canonical().compare(&b.canonical(), 1e-9)
}

fn opts(heap: HeapImpl, seed: u64) -> HacOptions {
    HacOptions {
        heap,
        seed,
        audit: true,
        trace_orientation: true,
        ..HacOptions::default()
    }
}

fn triangle(g: &WeightedGraph, seed: u64, kind: Linkage, chain: bool) -> Result<(), String> {
    let want = reference_hac(g, kind);
    let o = opts(HeapImpl::Tree, seed);
    let out = heap_hac(g, kind, &o).map_err(|e| e.to_string())?;
    same(&out.dendrogram, &want).map_err(|e| format!("heap: {e}"))?;
    let m = g.num_edges();
    if out.stats.merge_cost() as f64 > merge_cost_bound(m) {
        return Err(format!("merge cost {} over bound", out.stats.merge_cost()));
    }
    if chain {
        let out = chain_hac(g, kind, &o).map_err(|e| e.to_string())?;
        same(&out.dendrogram, &want).map_err(|e| format!("chain: {e}"))?;
    }
    Ok(())
}

fn tree_vs_meld(g: &WeightedGraph, seed: u64) -> Result<(), String> {
    for kind in [Linkage::Single, Linkage::Complete, Linkage::Wpgma] {
        let t = heap_hac(g, kind, &opts(HeapImpl::Tree, seed)).map_err(|e| e.to_string())?;
        let m = heap_hac(g, kind, &opts(HeapImpl::Meld, seed)).map_err(|e| e.to_string())?;
        if t.dendrogram != m.dendrogram {
            return Err(format!("{} differs", kind.name()));
        }
    }
    Ok(())
}

fn exact_vs_naive(g: &WeightedGraph, seed: u64) -> Result<(), String> {
    let want = naive_avg_hac(g).map_err(|e| e.to_string())?.dendrogram;
    for heap in [HeapImpl::Tree, HeapImpl::Meld] {
        let out = exact_avg_hac(g, &opts(heap, seed)).map_err(|e| e.to_string())?;
        same(&out.dendrogram, &want)?;
        let trace = out.orientation.ok_or("no orientation trace")?;
        if replay(&trace.events)? != trace.edges {
            return Err("orientation replay differs".into());
        }
        let out = exact_heap_avg_hac(g, &opts(heap, seed)).map_err(|e| e.to_string())?;
        same(&out.dendrogram, &want)?;
    }
    Ok(())
}

fn approx_closeness(g: &WeightedGraph, seed: u64) -> Result<(), String> {
    let eps = 0.1;
    let out = approx_avg_hac(g, eps, &opts(HeapImpl::Tree, seed)).map_err(|e| e.to_string())?;
    let report = closeness_audit(g, &out.dendrogram, eps).map_err(|e| e.to_string())?;
    if !report.pass {
        return Err(format!("closeness ratio {}", report.min_ratio));
    }
    Ok(())
}

pub fn run(a: SelftestArgs) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let graphs: Vec<WeightedGraph> = (0..a.trials)
        .map(|_| {
            let n = rng.gen_range(2..=64);
            let m = rng.gen_range(n - 1..=(n * (n - 1) / 2).min(256));
            random_connected(&mut rng, n, m)
        })
        .collect();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut failed = 0;
    for (name, check) in CHECKS {
        let first_failure = graphs
            .iter()
            .enumerate()
            .find_map(|(i, g)| check(g, a.seed).err().map(|e| (i, e)));
        let line = match first_failure {
            None => format!("PASS {name} ({} graphs)", graphs.len()),
            Some((i, e)) => {
                failed += 1;
                format!("FAIL {name}: graph {i}: {e}")
            }
        };
        writeln!(out, "{line}").map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })?;
    }
    if failed > 0 {
        return Err(CliError::Selftest(failed));
    }
    Ok(())
}
