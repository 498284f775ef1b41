//! Flattening dendrograms and scoring flat clusterings.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::dendrogram::Dendrogram;
use crate::graph::WeightedGraph;
use crate::linkage::Linkage;
use crate::reference::DenseState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("target {target} clusters outside [{min}, {n}]")]
    Target { target: usize, min: usize, n: usize },
    #[error("label vectors differ in length: {0} vs {1}")]
    Length(usize, usize),
    #[error("merge trace does not fit the graph: {0}")]
    Trace(String),
}

/// A partition of `0..n` with contiguous labels in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatClustering {
    labels: Vec<usize>,
    clusters: usize,
}

impl FlatClustering {
    /// Relabels arbitrary ids to `0, 1, ...` by first appearance.
    pub fn new<T: Eq + std::hash::Hash>(raw: &[T]) -> Self {
        let mut ids = HashMap::new();
        let labels = raw
            .iter()
            .map(|x| {
                let next = ids.len();
                *ids.entry(x).or_insert(next)
            })
            .collect();
        FlatClustering {
            labels,
            clusters: ids.len(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Leaf union-find that applies dendrogram merges one at a time.
struct Sweep<'a> {
    d: &'a Dendrogram,
    parent: Vec<usize>,
    /// Representative leaf of every node created so far.
    rep: Vec<usize>,
    applied: usize,
}

impl<'a> Sweep<'a> {
    fn new(d: &'a Dendrogram) -> Self {
        let n = d.num_leaves();
        Sweep {
            d,
            parent: (0..n).collect(),
            rep: (0..n).collect(),
            applied: 0,
        }
    }

    fn clusters(&self) -> usize {
        self.d.num_leaves() - self.applied
    }

    fn apply_next(&mut self) {
        let m = &self.d.merges()[self.applied];
        let (a, b) = (self.rep[m.left], self.rep[m.right]);
        let (ra, rb) = (find(&mut self.parent, a), find(&mut self.parent, b));
        self.parent[rb] = ra;
        self.rep.push(ra);
        self.applied += 1;
    }

    fn flat(&mut self) -> FlatClustering {
        let roots: Vec<usize> = (0..self.d.num_leaves())
            .map(|v| find(&mut self.parent, v))
            .collect();
        FlatClustering::new(&roots)
    }
}

/// Smallest reachable cluster count: one per dendrogram root.
pub fn min_clusters(d: &Dendrogram) -> usize {
    d.num_leaves() - d.len()
}

/// Keeps the first `n - target` merges and labels leaves by component.
pub fn cut_dendrogram(d: &Dendrogram, target: usize) -> Result<FlatClustering, EvalError> {
    let n = d.num_leaves();
    let min = min_clusters(d).max(1);
    if target < min || target > n {
        return Err(EvalError::Target { target, min, n });
    }
    let mut sweep = Sweep::new(d);
    while sweep.clusters() > target {
        sweep.apply_next();
    }
    Ok(sweep.flat())
}

fn check_len(a: &FlatClustering, b: &FlatClustering) -> Result<(), EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Length(a.len(), b.len()));
    }
    Ok(())
}

struct Contingency {
    cells: HashMap<(usize, usize), u64>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    n: u64,
}

impl Contingency {
    fn new(a: &FlatClustering, b: &FlatClustering) -> Self {
        let mut cells = HashMap::new();
        let mut rows = vec![0u64; a.num_clusters()];
        let mut cols = vec![0u64; b.num_clusters()];
        for (&x, &y) in a.labels.iter().zip(&b.labels) {
            *cells.entry((x, y)).or_insert(0) += 1;
            rows[x] += 1;
            cols[y] += 1;
        }
        Contingency {
            cells,
            rows,
            cols,
            n: a.len() as u64,
        }
    }
}

fn pairs(k: u64) -> f64 {
    (k * k.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index by pair counting.
pub fn ari(a: &FlatClustering, b: &FlatClustering) -> Result<f64, EvalError> {
    check_len(a, b)?;
    let t = Contingency::new(a, b);
    let index: f64 = t.cells.values().map(|&c| pairs(c)).sum();
    let sa: f64 = t.rows.iter().map(|&c| pairs(c)).sum();
    let sb: f64 = t.cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(t.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    // Only when both partitions are all-singletons or both a single block.
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, `I(A; B)` over the arithmetic mean of the
/// two entropies. Zero when both entropies are zero.
pub fn nmi(a: &FlatClustering, b: &FlatClustering) -> Result<f64, EvalError> {
    check_len(a, b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let t = Contingency::new(a, b);
    let n = t.n as f64;
    let (ha, hb) = (entropy(&t.rows, n), entropy(&t.cols, n));
    if ha + hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in &t.cells {
        let c = c as f64;
        mi += c / n * (c * n / (t.rows[x] as f64 * t.cols[y] as f64)).ln();
    }
    Ok((mi / ((ha + hb) / 2.0)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelScore {
    pub clusters: usize,
    pub ari: f64,
    pub nmi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelScores {
    /// One row per evaluated level, by decreasing cluster count.
    pub levels: Vec<LevelScore>,
    pub best_ari: LevelScore,
    pub best_nmi: LevelScore,
}

impl LevelScores {
    /// TSV table `clusters ari nmi` plus the two summary lines.
    pub fn to_report(&self) -> String {
        let mut s = String::from("clusters\tari\tnmi\n");
        for l in &self.levels {
            let _ = writeln!(s, "{}\t{:.6}\t{:.6}", l.clusters, l.ari, l.nmi);
        }
        let _ = writeln!(s, "best_ari {:.6} at {}", self.best_ari.ari, self.best_ari.clusters);
        let _ = writeln!(s, "best_nmi {:.6} at {}", self.best_nmi.nmi, self.best_nmi.clusters);
        s
    }
}

/// Scores every level of the dendrogram against `truth` and keeps the best.
///
/// With `levels = Some(k)`, only about `k` cluster counts spread evenly over
/// the reachable range are scored.
pub fn best_level_scores(
    d: &Dendrogram,
    truth: &FlatClustering,
    levels: Option<usize>,
) -> Result<LevelScores, EvalError> {
    let n = d.num_leaves();
    if truth.len() != n {
        return Err(EvalError::Length(n, truth.len()));
    }
    let min = min_clusters(d).max(1).min(n.max(1));
    let span = n.saturating_sub(min);
    let wanted: Vec<usize> = match levels {
        Some(k) if k >= 1 && k <= span => {
            let mut v: Vec<usize> = (0..k)
                .map(|i| n - (i * span) / (k - 1).max(1))
                .collect();
            v.dedup();
            v
        }
        _ => (min..=n).rev().collect(),
    };
    let mut sweep = Sweep::new(d);
    let mut rows = Vec::with_capacity(wanted.len());
    for t in wanted {
        while sweep.clusters() > t {
            sweep.apply_next();
        }
        let flat = sweep.flat();
        rows.push(LevelScore {
            clusters: t,
            ari: ari(&flat, truth)?,
            nmi: nmi(&flat, truth)?,
        });
    }
    let pick = |key: fn(&LevelScore) -> f64| {
        *rows
            .iter()
            .reduce(|best, r| if key(r) > key(best) { r } else { best })
            .expect("at least one level")
    };
    Ok(LevelScores {
        best_ari: pick(|r| r.ari),
        best_nmi: pick(|r| r.nmi),
        levels: rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosenessReport {
    /// Minimum over merges of merged true weight over the current maximum.
    pub min_ratio: f64,
    /// Index of the merge attaining `min_ratio`.
    pub worst_merge: Option<usize>,
    pub pass: bool,
}

/// Replays the merges of `d` in order on a dense average-linkage state and
/// checks that each one is within `1 - eps` of the heaviest pair.
pub fn closeness_audit(
    graph: &WeightedGraph,
    d: &Dendrogram,
    eps: f64,
) -> Result<ClosenessReport, EvalError> {
    let n = graph.num_vertices();
    if d.num_leaves() != n {
        return Err(EvalError::Trace(format!(
            "{} leaves for {n} vertices",
            d.num_leaves()
        )));
    }
    let mut state = DenseState::new(graph, Linkage::AvgExact);
    let mut slot: Vec<usize> = (0..n).collect();
    let mut min_ratio = 1.0f64;
    let mut worst = None;
    for (i, m) in d.merges().iter().enumerate() {
        let (a, b) = (slot[m.left], slot[m.right]);
        let w = state
            .weight(a, b)
            .filter(|_| state.is_active(a) && state.is_active(b) && a != b)
            .ok_or_else(|| EvalError::Trace(format!("merge {i} joins non-adjacent clusters")))?;
        let (_, _, max) = state.max_pair().expect("an adjacent pair exists");
        let ratio = w / max;
        if ratio < min_ratio {
            min_ratio = ratio;
            worst = Some(i);
        }
        let keep = state.merge(a, b).expect("checked adjacent");
        slot.push(keep);
    }
    Ok(ClosenessReport {
        min_ratio,
        worst_merge: worst,
        pass: min_ratio >= (1.0 - eps) - 1e-9,
    })
}
