use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graph-hac"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).env_remove("HAC_LOG").output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

/// `(left, right, weight)` rows of a dendrogram file.
fn merges(text: &str) -> Vec<(usize, usize, f64)> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with("root"))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn hac_wpgma_on_path() {
    let dir = TempDir::new().unwrap();
    write(&dir, "g.wel", "0 1 1.0\n1 2 0.6\n");
    let out = run(dir.path(), &["hac", "--linkage", "wpgma", "--input", "g.wel", "--output", "d.tsv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("d.tsv")).unwrap();
    assert_eq!(merges(&text), vec![(0, 1, 1.0), (3, 2, 0.6)]);
}

#[test]
fn knn_graph_on_three_points() {
    let dir = TempDir::new().unwrap();
    write(&dir, "pts.csv", "0\n1\n10\n");
    let out = run(dir.path(), &["knn-graph", "--k", "1", "--input", "pts.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let edges: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(edges.len(), 2, "{text}");
}

#[test]
fn eval_with_recoverable_labels() {
    let dir = TempDir::new().unwrap();
    write(&dir, "g.wel", "0 1 0.9\n2 3 0.8\n1 2 0.1\n");
    write(&dir, "l.txt", "7\n7\n3\n3\n");
    let out = run(dir.path(), &["hac", "--linkage", "avg-exact", "--input", "g.wel", "--output", "d.tsv"]);
    assert!(out.status.success());
    let out = run(dir.path(), &["eval", "--dendrogram", "d.tsv", "--labels", "l.txt"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.starts_with("clusters\tari\tnmi\n"));
    assert!(report.contains("best_ari 1.000000 at 2"), "{report}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut text = String::new();
    for u in 0..30usize {
        for v in [u + 1, u + 7] {
            if v < 30 {
                text += &format!("{u} {v} {}\n", ((u * 31 + v * 17) % 97) as f64 / 97.0 + 0.001);
            }
        }
    }
    write(&dir, "g.wel", &text);
    let configs: [&[&str]; 4] = [
        &["--linkage", "avg-approx"],
        &["--linkage", "avg-exact", "--heap-impl", "meld", "--seed", "9"],
        &["--linkage", "complete", "--driver", "heap"],
        &["--linkage", "avg-exact", "--driver", "naive"],
    ];
    for cfg in configs {
        let mut args = vec!["hac", "--input", "g.wel"];
        args.extend_from_slice(cfg);
        let a = run(dir.path(), &args);
        let b = run(dir.path(), &args);
        assert!(a.status.success(), "{cfg:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{cfg:?}");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn forests_print_one_root_per_component() {
    let dir = TempDir::new().unwrap();
    write(&dir, "g.wel", "0 1 0.5\n2 3 0.4\n");
    let out = run(dir.path(), &["hac", "--linkage", "single", "--input", "g.wel"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("root")).count(), 2);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    write(&dir, "g.wel", "0 1 1.0\n1 2 0.5\n");
    write(&dir, "bad.wel", "0 1 x\n");
    write(&dir, "dup.wel", "0 1 0.3\n1 0 0.7\n");
    let code = |args: &[&str]| run(dir.path(), args).status.code().unwrap();

    assert_eq!(code(&["hac", "--input", "g.wel"]), 0);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["hac", "--input", "g.wel", "--linkage", "median"]), 2);
    assert_eq!(code(&["hac", "--input", "g.wel", "--linkage", "single", "--epsilon", "0.1"]), 2);
    assert_eq!(code(&["hac", "--input", "g.wel", "--linkage", "avg-approx", "--delta-cap", "4"]), 2);
    assert_eq!(code(&["hac", "--input", "g.wel", "--linkage", "wpgma", "--driver", "naive"]), 2);
    assert_eq!(code(&["hac", "--input", "g.wel", "--epsilon", "1.5"]), 2);
    assert_eq!(code(&["hac", "--input", "missing.wel"]), 3);
    assert_eq!(code(&["hac", "--input", "bad.wel"]), 4);
    assert_eq!(code(&["hac", "--input", "dup.wel"]), 4);
    assert_eq!(code(&["hac", "--input", "dup.wel", "--duplicates", "max"]), 0);
    assert_eq!(code(&["eval", "--dendrogram", "g.wel", "--labels", "g.wel"]), 4);
}

#[test]
fn delta_cap_too_small_is_an_engine_error() {
    let dir = TempDir::new().unwrap();
    // K5 cannot be oriented with outdegree 1.
    let mut text = String::new();
    for u in 0..5 {
        for v in u + 1..5 {
            text += &format!("{u} {v} 0.{}{}\n", u + 1, v);
        }
    }
    write(&dir, "k5.wel", &text);
    let out = run(dir.path(), &["hac", "--input", "k5.wel", "--linkage", "avg-exact", "--delta-cap", "1"]);
    assert_eq!(out.status.code(), Some(5));
    let out = run(dir.path(), &["hac", "--input", "k5.wel", "--linkage", "avg-exact", "--delta-cap", "4", "--audit"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_lists_exit_codes() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Exit codes"));
    assert!(text.contains("HAC_LOG"));
}

#[test]
fn bench_and_selftest() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["bench", "--sizes", "50,100", "--engines", "exact,approx", "--reps", "1", "--output", "b.tsv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tsv = fs::read_to_string(dir.path().join("b.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5);
    assert!(tsv.starts_with("family\tn\tm\tengine\tmedian_ms\tmerge_cost\n"));

    let out = run(dir.path(), &["selftest", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}

#[test]
fn unweighted_input_and_knn_similarities() {
    let dir = TempDir::new().unwrap();
    write(&dir, "u.el", "0 1\n1 2\n2 0\n2 3\n");
    let out = run(dir.path(), &["hac", "--input", "u.el", "--unweighted", "--linkage", "avg-exact"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(merges(&String::from_utf8(out.stdout).unwrap()).len(), 3);

    write(&dir, "p.csv", "x,y\n0,0\n0,1\n5,5\n5,6\n");
    let out = run(dir.path(), &["knn-graph", "--input", "p.csv", "--k", "1", "--similarity", "exp", "--scale", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(dir.path(), &["knn-graph", "--input", "p.csv", "--k", "1", "--similarity", "exp", "--scale", "0"]);
    assert_eq!(out.status.code(), Some(2));
}
