//! Input graphs and point sets.
//!
//! A [`WeightedGraph`] is a simple undirected graph whose edge weights are
//! similarities (larger means more similar). Graphs are read from
//! whitespace-separated edge lists, or built from a [`PointSet`] through an
//! exact k-nearest-neighbor search followed by symmetrization.

use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

/// Identifier of a vertex (and, during clustering, of a cluster slot).
pub type VertexId = usize;

/// Errors raised while ingesting or validating graphs and point sets.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: malformed edge: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: VertexId },
    #[error("line {line}: negative vertex id {value}")]
    NegativeId { line: usize, value: String },
    #[error("line {line}: duplicate edge ({u}, {v})")]
    Duplicate { line: usize, u: VertexId, v: VertexId },
    #[error("line {line}: non-finite weight {value}")]
    NonFinite { line: usize, value: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("k-NN graph: {0}")]
    Knn(String),
    #[error("point set: {0}")]
    Points(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GraphError {
    fn from(err: std::io::Error) -> Self {
        GraphError::Io(err.to_string())
    }
}

/// An undirected weighted edge. Ingestion normalizes `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

impl Edge {
    pub fn new(u: VertexId, v: VertexId, w: f64) -> Self {
        if u <= v {
            Edge { u, v, w }
        } else {
            Edge { u: v, v: u, w }
        }
    }
}

/// Static input graph: `n` vertices and a set of undirected similarity edges.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph and checks every invariant (ids in range, no self-loops,
    /// no duplicate pairs, finite weights).
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let graph = WeightedGraph {
            n,
            edges: edges.into_iter().map(|e| Edge::new(e.u, e.v, e.w)).collect(),
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Convenience constructor from `(u, v, w)` triples; `n` is inferred as
    /// one more than the largest id.
    pub fn from_triples(triples: &[(VertexId, VertexId, f64)]) -> Result<Self, GraphError> {
        let n = triples.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0);
        Self::with_vertices(n, triples)
    }

    pub fn with_vertices(
        n: usize,
        triples: &[(VertexId, VertexId, f64)],
    ) -> Result<Self, GraphError> {
        Self::new(n, triples.iter().map(|&(u, v, w)| Edge::new(u, v, w)).collect())
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Checks the graph invariants.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut seen = std::collections::HashSet::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.u >= self.n || e.v >= self.n {
                return Err(GraphError::Invalid(format!(
                    "edge ({}, {}) out of range for n = {}",
                    e.u, e.v, self.n
                )));
            }
            if e.u == e.v {
                return Err(GraphError::Invalid(format!("self-loop on vertex {}", e.u)));
            }
            if !e.w.is_finite() {
                return Err(GraphError::Invalid(format!(
                    "non-finite weight on edge ({}, {})",
                    e.u, e.v
                )));
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert(key) {
                return Err(GraphError::Invalid(format!(
                    "duplicate edge ({}, {})",
                    key.0, key.1
                )));
            }
        }
        Ok(())
    }

    /// Writes the graph as a weighted edge list, one `u v w` line per edge.
    pub fn write_edge_list<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(out, "{} {} {:.16e}", e.u, e.v, e.w)?;
        }
        Ok(())
    }
}

/// Whether an edge list carries a third weight column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListMode {
    Weighted,
    Unweighted,
}

/// What to do when the same unordered pair appears twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Error,
    Max,
}

fn parse_id(tok: &str, line: usize) -> Result<VertexId, GraphError> {
    if tok.starts_with('-') {
        return Err(GraphError::NegativeId {
            line,
            value: tok.to_string(),
        });
    }
    tok.parse::<VertexId>().map_err(|_| GraphError::Malformed {
        line,
        reason: format!("bad vertex id {tok:?}"),
    })
}

/// Parses an edge list from a reader.
///
/// Lines are `u v` (unweighted) or `u v w` (weighted); blank lines and lines
/// starting with `#` are skipped. In unweighted mode every weight is the
/// placeholder `1.0`; see [`unweighted_to_weighted`].
pub fn parse_edge_list<R: BufRead>(
    reader: R,
    mode: EdgeListMode,
    policy: DuplicatePolicy,
) -> Result<WeightedGraph, GraphError> {
    let mut index: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut n = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let expected = match mode {
            EdgeListMode::Weighted => 3,
            EdgeListMode::Unweighted => 2,
        };
        if fields.len() != expected {
            return Err(GraphError::Malformed {
                line: lineno,
                reason: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let u = parse_id(fields[0], lineno)?;
        let v = parse_id(fields[1], lineno)?;
        let w = match mode {
            EdgeListMode::Unweighted => 1.0,
            EdgeListMode::Weighted => {
                let w: f64 = fields[2].parse().map_err(|_| GraphError::Malformed {
                    line: lineno,
                    reason: format!("bad weight {:?}", fields[2]),
                })?;
                if !w.is_finite() {
                    return Err(GraphError::NonFinite {
                        line: lineno,
                        value: fields[2].to_string(),
                    });
                }
                w
            }
        };
        if u == v {
            return Err(GraphError::SelfLoop {
                line: lineno,
                vertex: u,
            });
        }
        n = n.max(u + 1).max(v + 1);
        let key = (u.min(v), u.max(v));
        match index.get(&key) {
            Some(&at) => match policy {
                DuplicatePolicy::Error => {
                    return Err(GraphError::Duplicate {
                        line: lineno,
                        u: key.0,
                        v: key.1,
                    })
                }
                DuplicatePolicy::Max => edges[at].w = edges[at].w.max(w),
            },
            None => {
                index.insert(key, edges.len());
                edges.push(Edge::new(u, v, w));
            }
        }
    }
    Ok(WeightedGraph { n, edges })
}

/// Parses an edge list held in memory.
pub fn parse_edge_list_str(
    text: &str,
    mode: EdgeListMode,
    policy: DuplicatePolicy,
) -> Result<WeightedGraph, GraphError> {
    parse_edge_list(text.as_bytes(), mode, policy)
}

/// Replaces every weight by `1 / ln(d(u) + d(v))`, the standard similarity
/// for unweighted inputs. The edge set is unchanged.
pub fn unweighted_to_weighted(graph: &WeightedGraph) -> WeightedGraph {
    let deg = graph.degrees();
    let edges = graph
        .edges
        .iter()
        .map(|e| Edge {
            u: e.u,
            v: e.v,
            w: 1.0 / ((deg[e.u] + deg[e.v]) as f64).ln(),
        })
        .collect();
    WeightedGraph { n: graph.n, edges }
}

/// Result of [`symmetrize`]: the undirected graph and the number of
/// self-loops that were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetrized {
    pub graph: WeightedGraph,
    pub dropped_self_loops: usize,
}

/// Collapses a directed edge list into an undirected graph on `n` vertices.
/// Opposite directions become one edge carrying the larger weight; pairs keep
/// the order of their first appearance.
pub fn symmetrize(
    n: usize,
    directed: &[(VertexId, VertexId, f64)],
) -> Result<Symmetrized, GraphError> {
    let mut index: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut dropped = 0;
    for &(u, v, w) in directed {
        if u == v {
            dropped += 1;
            continue;
        }
        let key = (u.min(v), u.max(v));
        match index.get(&key) {
            Some(&at) => edges[at].w = edges[at].w.max(w),
            None => {
                index.insert(key, edges.len());
                edges.push(Edge::new(u, v, w));
            }
        }
    }
    let graph = WeightedGraph::new(n, edges)?;
    Ok(Symmetrized {
        graph,
        dropped_self_loops: dropped,
    })
}

/// A set of d-dimensional points with optional integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self, GraphError> {
        if let Some(first) = points.first() {
            let d = first.len();
            if d == 0 {
                return Err(GraphError::Points("points must have dimension >= 1".into()));
            }
            if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != d) {
                return Err(GraphError::Points(format!(
                    "point {i} has dimension {}, expected {d}",
                    p.len()
                )));
            }
            if points.iter().flatten().any(|x| !x.is_finite()) {
                return Err(GraphError::Points("non-finite coordinate".into()));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != points.len() {
                return Err(GraphError::Points(format!(
                    "{} labels for {} points",
                    labels.len(),
                    points.len()
                )));
            }
        }
        Ok(PointSet { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn with_labels(self, labels: Vec<usize>) -> Result<Self, GraphError> {
        PointSet::new(self.points, Some(labels))
    }
}

/// Reads a point set from CSV: one point per row, all columns numeric. A
/// first row that fails to parse is treated as a header.
pub fn read_points_csv<R: BufRead>(reader: R) -> Result<PointSet, GraphError> {
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = trimmed.split(',').map(|f| f.trim().parse()).collect();
        match row {
            Ok(row) => points.push(row),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(GraphError::Points(format!(
                    "line {}: non-numeric field",
                    i + 1
                )))
            }
        }
    }
    PointSet::new(points, None)
}

/// Reads one non-negative integer label per line.
pub fn read_labels<R: BufRead>(reader: R) -> Result<Vec<usize>, GraphError> {
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        labels.push(trimmed.parse().map_err(|_| {
            GraphError::Points(format!("line {}: bad label {trimmed:?}", i + 1))
        })?);
    }
    Ok(labels)
}

/// Strictly decreasing map from Euclidean distance to similarity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SimilarityMap {
    /// `1 / (1 + d)`.
    #[default]
    InverseOnePlus,
    /// `exp(-d / scale)`.
    Exponential { scale: f64 },
}

impl SimilarityMap {
    pub fn apply(self, distance: f64) -> f64 {
        match self {
            SimilarityMap::InverseOnePlus => 1.0 / (1.0 + distance),
            SimilarityMap::Exponential { scale } => (-distance / scale).exp(),
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Builds the symmetrized exact k-NN similarity graph of a point set.
///
/// Each point links to its `k` nearest other points (ties broken by lower
/// index); the directed edges are then symmetrized with the max rule.
pub fn build_knn_graph(
    points: &PointSet,
    k: usize,
    similarity: SimilarityMap,
) -> Result<WeightedGraph, GraphError> {
    let n = points.len();
    if n == 0 {
        return Err(GraphError::Knn("empty point set".into()));
    }
    if k == 0 || k >= n {
        return Err(GraphError::Knn(format!(
            "k = {k} must satisfy 1 <= k < n = {n}"
        )));
    }
    let pts = points.points();
    let mut directed = Vec::with_capacity(n * k);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, p) in pts.iter().enumerate() {
        candidates.clear();
        candidates.extend(
            pts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| (euclidean(p, q), j)),
        );
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        directed.extend(
            candidates[..k]
                .iter()
                .map(|&(d, j)| (i, j, similarity.apply(d))),
        );
    }
    Ok(symmetrize(n, &directed)?.graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, policy: DuplicatePolicy) -> Result<WeightedGraph, GraphError> {
        parse_edge_list_str(text, EdgeListMode::Weighted, policy)
    }

    #[test]
    fn parses_weighted_list() {
        let g = parse("0 1 0.5\n1 2 0.25", DuplicatePolicy::Error).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.edges()[1], Edge::new(1, 2, 0.25));
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let g = parse("# header\n\n0 1 0.5\n  # indented\n", DuplicatePolicy::Error).unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn rejects_self_loop_with_line() {
        let err = parse("0 0 1.0", DuplicatePolicy::Error).unwrap_err();
        assert_eq!(err, GraphError::SelfLoop { line: 1, vertex: 0 });
    }

    #[test]
    fn duplicate_policies() {
        let g = parse("0 1 0.5\n1 0 0.7", DuplicatePolicy::Max).unwrap();
        assert_eq!(g.edges(), &[Edge::new(0, 1, 0.7)]);
        let err = parse("0 1 0.5\n1 0 0.7", DuplicatePolicy::Error).unwrap_err();
        assert!(matches!(err, GraphError::Duplicate { line: 2, u: 0, v: 1 }));
    }

    #[test]
    fn reports_negative_and_malformed() {
        assert!(matches!(
            parse("0 1 0.5\n-1 2 0.3", DuplicatePolicy::Error),
            Err(GraphError::NegativeId { line: 2, .. })
        ));
        assert!(matches!(
            parse("0 1", DuplicatePolicy::Error),
            Err(GraphError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse("0 1 abc", DuplicatePolicy::Error),
            Err(GraphError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse("0 1 inf", DuplicatePolicy::Error),
            Err(GraphError::NonFinite { line: 1, .. })
        ));
    }

    #[test]
    fn unweighted_mode_uses_placeholder() {
        let g = parse_edge_list_str("0 1\n1 2\n", EdgeListMode::Unweighted, DuplicatePolicy::Error)
            .unwrap();
        assert!(g.edges().iter().all(|e| e.w == 1.0));
    }

    #[test]
    fn degree_weighting() {
        // d(0)=3, d(1)=5 for the (0,1) edge.
        let mut triples = vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)];
        for leaf in 4..8 {
            triples.push((1, leaf, 1.0));
        }
        let g = unweighted_to_weighted(&WeightedGraph::from_triples(&triples).unwrap());
        assert!((g.edges()[0].w - 0.480898).abs() < 1e-6);
        assert!((g.edges()[0].w - 1.0 / 8f64.ln()).abs() < 1e-15);

        let single = unweighted_to_weighted(&WeightedGraph::from_triples(&[(0, 1, 1.0)]).unwrap());
        assert!((single.edges()[0].w - std::f64::consts::LOG2_E).abs() < 1e-15);

        let star = WeightedGraph::from_triples(&[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)])
            .unwrap();
        let star = unweighted_to_weighted(&star);
        assert!(star.edges().iter().all(|e| e.w == 1.0 / 5f64.ln()));
    }

    #[test]
    fn symmetrize_rules() {
        let s = symmetrize(2, &[(0, 1, 0.9), (1, 0, 0.4)]).unwrap();
        assert_eq!(s.graph.edges(), &[Edge::new(0, 1, 0.9)]);
        let s = symmetrize(2, &[(0, 1, 0.9)]).unwrap();
        assert_eq!(s.graph.edges(), &[Edge::new(0, 1, 0.9)]);
        let s = symmetrize(2, &[(0, 0, 1.0), (0, 1, 0.5)]).unwrap();
        assert_eq!(s.graph.edges(), &[Edge::new(0, 1, 0.5)]);
        assert_eq!(s.dropped_self_loops, 1);
    }

    #[test]
    fn knn_collinear_points() {
        let pts = PointSet::new(vec![vec![0.0], vec![1.0], vec![10.0]], None).unwrap();
        let g = build_knn_graph(&pts, 1, SimilarityMap::InverseOnePlus).unwrap();
        assert_eq!(
            g.edges(),
            &[Edge::new(0, 1, 0.5), Edge::new(1, 2, 1.0 / 10.0)]
        );
    }

    #[test]
    fn knn_identical_points_and_errors() {
        let pts = PointSet::new(vec![vec![3.0, 4.0], vec![3.0, 4.0]], None).unwrap();
        let g = build_knn_graph(&pts, 1, SimilarityMap::default()).unwrap();
        assert_eq!(g.edges(), &[Edge::new(0, 1, 1.0)]);
        assert!(build_knn_graph(&pts, 2, SimilarityMap::default()).is_err());
        let empty = PointSet::new(vec![], None).unwrap();
        assert!(build_knn_graph(&empty, 1, SimilarityMap::default()).is_err());
        assert!(PointSet::new(vec![vec![1.0], vec![1.0, 2.0]], None).is_err());
    }

    #[test]
    fn knn_full_is_complete() {
        let pts = PointSet::new((0..6).map(|i| vec![i as f64, (i * i) as f64]).collect(), None)
            .unwrap();
        let g = build_knn_graph(&pts, 5, SimilarityMap::default()).unwrap();
        assert_eq!(g.num_edges(), 15);
    }

    #[test]
    fn reads_points_and_labels() {
        let pts = read_points_csv("x,y\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts.dim(), 2);
        assert!(read_points_csv("1,2\n3,a\n".as_bytes()).is_err());
        assert_eq!(read_labels("0\n1\n\n2\n".as_bytes()).unwrap(), vec![0, 1, 2]);
    }
}
