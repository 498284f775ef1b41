use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use graph_hac::average::{approx_avg_hac, exact_avg_hac, naive_avg_hac};
use graph_hac::engine::{HacOptions, HacOutput};
use graph_hac::generators::{random_connected, star};
use graph_hac::graph::WeightedGraph;

use crate::{emit, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// One center joined to n - 1 leaves with unit weights.
    Star,
    /// Connected graph with about 4n edges and uniform weights.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Engine {
    Naive,
    Exact,
    Approx,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Vertex counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000")]
    sizes: Vec<usize>,
    #[arg(long, value_enum, default_value = "star")]
    family: Family,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "naive,exact,approx")]
    engines: Vec<Engine>,
    /// Closeness for the approximate engine.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Repetitions per cell; the median is reported.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TSV output; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn instance(family: Family, n: usize, seed: u64) -> WeightedGraph {
    match family {
        Family::Star => star(n - 1, 1.0),
        Family::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
            let m = (4 * n).min(n * (n - 1) / 2).max(n - 1);
            random_connected(&mut rng, n, m)
        }
    }
}

fn run_engine(engine: Engine, graph: &WeightedGraph, eps: f64, seed: u64) -> Result<HacOutput, CliError> {
    let opts = HacOptions {
        seed,
        ..HacOptions::default()
    };
    let out = match engine {
        Engine::Naive => naive_avg_hac(graph),
        Engine::Exact => exact_avg_hac(graph, &opts),
        Engine::Approx => approx_avg_hac(graph, eps, &opts),
    };
    out.map_err(|e| CliError::Engine(e.to_string()))
}

pub fn run(a: BenchArgs) -> Result<(), CliError> {
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be positive".into()));
    }
    if let Some(&n) = a.sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!("--sizes entries must be at least 2, got {n}")));
    }
    if !(0.0..1.0).contains(&a.epsilon) {
        return Err(CliError::Usage(format!("--epsilon must lie in [0, 1), got {}", a.epsilon)));
    }
    let mut rows = vec!["family\tn\tm\tengine\tmedian_ms\tmerge_cost".to_string()];
    for &n in &a.sizes {
        let graph = instance(a.family, n, a.seed);
        for &engine in &a.engines {
            let mut times = Vec::with_capacity(a.reps);
            let mut cost = 0;
            for _ in 0..a.reps {
                let start = Instant::now();
                let out = run_engine(engine, &graph, a.epsilon, a.seed)?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
                cost = out.stats.merge_cost();
            }
            times.sort_by(f64::total_cmp);
            let median = times[times.len() / 2];
            info!("{:?} n={n} engine={:?}: {median:.3} ms", a.family, engine);
            rows.push(format!(
                "{}\t{n}\t{}\t{}\t{median:.3}\t{cost}",
                family_name(a.family),
                graph.num_edges(),
                engine_name(engine),
            ));
        }
    }
    let text = rows.join("\n") + "\n";
    emit(a.output.as_deref(), |out| out.write_all(text.as_bytes()))
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Star => "star",
        Family::Random => "random",
    }
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Naive => "naive",
        Engine::Exact => "exact",
        Engine::Approx => "approx",
    }
}
