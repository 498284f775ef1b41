//! Command-line front end: cluster graphs, build k-NN graphs, score
//! dendrograms, time the average-linkage engines and run the oracle suites.

mod bench;
mod selftest;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use thiserror::Error;

use graph_hac::average::{approx_avg_hac, exact_avg_hac, exact_heap_avg_hac, naive_avg_hac};
use graph_hac::dendrogram::Dendrogram;
use graph_hac::engine::{chain_hac, heap_hac, HacOptions, HacOutput};
use graph_hac::evaluation::{best_level_scores, FlatClustering};
use graph_hac::graph::{
    build_knn_graph, parse_edge_list, read_labels, read_points_csv, unweighted_to_weighted,
    DuplicatePolicy, EdgeListMode, SimilarityMap, WeightedGraph,
};
use graph_hac::heap::HeapImpl;
use graph_hac::linkage::Linkage;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;
pub const EXIT_ENGINE: i32 = 5;
pub const EXIT_SELFTEST: i32 = 6;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  bad flags or an invalid flag combination
  3  a file could not be read or written
  4  malformed input (edge list, points, labels, dendrogram)
  5  clustering failed (engine error or failed audit)
  6  selftest found a failure

Set HAC_LOG=info or HAC_LOG=debug for progress output on stderr.";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Engine(String),
    #[error("{0} selftest check(s) failed")]
    Selftest(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Format(_) => EXIT_FORMAT,
            CliError::Engine(_) => EXIT_ENGINE,
            CliError::Selftest(_) => EXIT_SELFTEST,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "graph-hac",
    version,
    about = "Hierarchical agglomerative clustering on weighted graphs",
    after_help = EXIT_CODES
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster a weighted edge list into a dendrogram.
    Hac(HacArgs),
    /// Build a symmetrized k-NN similarity graph from CSV points.
    KnnGraph(KnnArgs),
    /// Score every level of a dendrogram against ground-truth labels.
    Eval(EvalArgs),
    /// Time the naive, exact and approximate average-linkage engines.
    Bench(bench::BenchArgs),
    /// Run randomized oracle-equivalence and audit checks.
    Selftest(selftest::SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HeapChoice {
    Tree,
    Meld,
}

impl From<HeapChoice> for HeapImpl {
    fn from(h: HeapChoice) -> Self {
        match h {
            HeapChoice::Tree => HeapImpl::Tree,
            HeapChoice::Meld => HeapImpl::Meld,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Driver {
    /// Nearest-neighbor chain.
    Chain,
    /// Global heap of best edges.
    Heap,
    /// Eager reference engine (average linkage only).
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Duplicates {
    Error,
    Max,
}

#[derive(Debug, Args)]
struct HacArgs {
    /// Edge list, one `u v w` triple per line.
    #[arg(long)]
    input: PathBuf,
    /// Edge list has no weights; use 1 / ln(d(u) + d(v)).
    #[arg(long)]
    unweighted: bool,
    #[arg(long, value_enum, default_value = "error")]
    duplicates: Duplicates,
    /// single, complete, wpgma, avg-exact or avg-approx.
    #[arg(long, default_value = "avg-approx")]
    linkage: Linkage,
    /// Defaults to heap for avg-approx and chain otherwise.
    #[arg(long, value_enum)]
    driver: Option<Driver>,
    /// Closeness for avg-approx [default: 0.1].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Outdegree cap of the edge orientation used by avg-exact.
    #[arg(long)]
    delta_cap: Option<usize>,
    #[arg(long, value_enum, default_value = "tree")]
    heap_impl: HeapChoice,
    /// Seeds hashing in the meld heap.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check internal invariants after every merge.
    #[arg(long)]
    audit: bool,
    /// Dendrogram output; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Similarity {
    /// 1 / (1 + d)
    Inverse,
    /// exp(-d / scale)
    Exp,
}

#[derive(Debug, Args)]
struct KnnArgs {
    /// CSV with one point per row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "inverse")]
    similarity: Similarity,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Edge list output; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    dendrogram: PathBuf,
    /// One integer label per leaf, one per line.
    #[arg(long)]
    labels: PathBuf,
    /// Score only about this many evenly spaced levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Report output; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("HAC_LOG", "off"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("graph-hac: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Hac(a) => cmd_hac(a),
        Command::KnnGraph(a) => cmd_knn(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => bench::run(a),
        Command::Selftest(a) => selftest::run(a),
    }
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes through `f` to `path`, or to stdout when `path` is `None`.
pub(crate) fn emit<F>(path: Option<&Path>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| CliError::Io { path: p, source }
    };
    match path {
        Some(p) => {
            let file = File::create(p).map_err(io_err(p))?;
            let mut out = BufWriter::new(file);
            f(&mut out).and_then(|_| out.flush()).map_err(io_err(p))
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            f(&mut out).and_then(|_| out.flush()).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn read_graph(path: &Path, unweighted: bool, dup: Duplicates) -> Result<WeightedGraph, CliError> {
    let mode = if unweighted {
        EdgeListMode::Unweighted
    } else {
        EdgeListMode::Weighted
    };
    let policy = match dup {
        Duplicates::Error => DuplicatePolicy::Error,
        Duplicates::Max => DuplicatePolicy::Max,
    };
    let g = parse_edge_list(open(path)?, mode, policy)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    Ok(if unweighted { unweighted_to_weighted(&g) } else { g })
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn cmd_hac(a: HacArgs) -> Result<(), CliError> {
    let kind = a.linkage;
    if a.epsilon.is_some() && kind != Linkage::AvgApprox {
        return Err(usage("--epsilon only applies to --linkage avg-approx"));
    }
    let driver = a.driver.unwrap_or(if kind == Linkage::AvgApprox {
        Driver::Heap
    } else {
        Driver::Chain
    });
    if a.delta_cap.is_some() && !(kind == Linkage::AvgExact && driver == Driver::Chain) {
        return Err(usage("--delta-cap only applies to --linkage avg-exact with the chain driver"));
    }
    if a.delta_cap == Some(0) {
        return Err(usage("--delta-cap must be positive"));
    }
    match (kind, driver) {
        (Linkage::AvgApprox, Driver::Heap) => {}
        (Linkage::AvgApprox, _) => return Err(usage("avg-approx runs on the heap driver only")),
        (k, Driver::Naive) if k.is_triangle_based() => {
            return Err(usage("--driver naive applies to average linkage only"))
        }
        _ => {}
    }
    let eps = a.epsilon.unwrap_or(0.1);
    if !(0.0..1.0).contains(&eps) {
        return Err(usage(format!("--epsilon must lie in [0, 1), got {eps}")));
    }

    let graph = read_graph(&a.input, a.unweighted, a.duplicates)?;
    info!(
        "read {} vertices, {} edges from {}",
        graph.num_vertices(),
        graph.num_edges(),
        a.input.display()
    );
    let opts = HacOptions {
        heap: a.heap_impl.into(),
        seed: a.seed,
        audit: a.audit,
        delta_cap: a.delta_cap,
        trace_orientation: false,
    };
    let result = match (kind, driver) {
        (Linkage::AvgApprox, _) => approx_avg_hac(&graph, eps, &opts),
        (Linkage::AvgExact, Driver::Chain) => exact_avg_hac(&graph, &opts),
        (Linkage::AvgExact, Driver::Heap) => exact_heap_avg_hac(&graph, &opts),
        (Linkage::AvgExact, Driver::Naive) => naive_avg_hac(&graph),
        (k, Driver::Chain) => chain_hac(&graph, k, &opts),
        (k, _) => heap_hac(&graph, k, &opts),
    };
    let HacOutput {
        dendrogram, stats, ..
    } = result.map_err(|e| CliError::Engine(e.to_string()))?;
    info!(
        "{} merges, merge cost {}, best-edge calls {}, stale pops {}, flips {}",
        dendrogram.len(),
        stats.merge_cost(),
        stats.best_edge_calls,
        stats.stale_pops,
        stats.flips
    );
    emit(a.output.as_deref(), |out| dendrogram.write(out))
}

fn cmd_knn(a: KnnArgs) -> Result<(), CliError> {
    let similarity = match a.similarity {
        Similarity::Inverse => SimilarityMap::InverseOnePlus,
        Similarity::Exp if a.scale > 0.0 => SimilarityMap::Exponential { scale: a.scale },
        Similarity::Exp => return Err(usage("--scale must be positive")),
    };
    let fmt = |e: graph_hac::graph::GraphError| CliError::Format(format!("{}: {e}", a.input.display()));
    let points = read_points_csv(open(&a.input)?).map_err(fmt)?;
    let graph = build_knn_graph(&points, a.k, similarity).map_err(|e| match e {
        graph_hac::graph::GraphError::Knn(msg) => CliError::Usage(msg),
        other => fmt(other),
    })?;
    info!("k-NN graph: {} vertices, {} edges", graph.num_vertices(), graph.num_edges());
    emit(a.output.as_deref(), |out| graph.write_edge_list(out))
}

fn read_dendrogram(path: &Path) -> Result<Dendrogram, CliError> {
    Dendrogram::read(open(path)?).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let d = read_dendrogram(&a.dendrogram)?;
    let labels = read_labels(open(&a.labels)?)
        .map_err(|e| CliError::Format(format!("{}: {e}", a.labels.display())))?;
    if labels.len() != d.num_leaves() {
        return Err(CliError::Format(format!(
            "{} labels for {} leaves",
            labels.len(),
            d.num_leaves()
        )));
    }
    if a.levels == Some(0) {
        return Err(usage("--levels must be positive"));
    }
    let truth = FlatClustering::new(&labels);
    let scores = best_level_scores(&d, &truth, a.levels).map_err(|e| CliError::Format(e.to_string()))?;
    let report = scores.to_report();
    emit(a.output.as_deref(), |out| out.write_all(report.as_bytes()))
}

