use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const FAST_CONFIG: &str = r#"
seed = 21
[metrics]
reference_graphs = 4
[robustness]
trials = 40
pool_size = 6
[ergm]
burn_in = 2000
interval = 50
samples = 100
max_rounds = 3
bridge_steps = 4
gof_simulations = 5
[[ergm.models]]
name = "dyad_independent"
graph = "full"
terms = ["edges", "nodecov:age", "nodecov:reward"]
[[ergm.models]]
name = "triadic"
graph = "connected"
terms = ["edges", "gwesp"]
"#;

fn coappear(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coappear"))
        .current_dir(dir)
        .args(args)
        .args(["--out", ".", "--faces", "faces.jsonl", "--images", "images.jsonl", "--watchlist", "watchlist.jsonl"])
        .env_remove("COAPPEAR_OUT")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = coappear(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn failure(dir: &Path, args: &[&str]) -> Value {
    let out = coappear(dir, args);
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).unwrap()
}

fn corpus(dir: &Path) -> &'static str {
    std::fs::write(dir.join("config.toml"), FAST_CONFIG).unwrap();
    ok(dir, &["synth", "--config", "config.toml", "--watchlisted", "8", "--decoys", "3", "--loner-fraction", "0.2"]);
    "config.toml"
}

#[test]
fn cluster_recovers_planted_identities() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let summary = ok(dir.path(), &["cluster", "--seed", "21"]);
    assert_eq!(summary["clusters"], 30);
    assert!(summary["evaluation"]["adjusted_mutual_info"].as_f64().unwrap() >= 0.95, "{summary}");
    assert!(summary["evaluation"]["rand_index"].as_f64().unwrap() >= 0.95, "{summary}");
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = corpus(dir.path());
    let summary = ok(dir.path(), &["cluster", "--config", config, "--cutoff", "0.3", "--seed", "5"]);
    assert_eq!(summary["cutoff"], 0.3);
    assert_eq!(summary["provenance"]["seed"], 5);
}

#[test]
fn report_on_empty_corpus_fails_with_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["faces.jsonl", "images.jsonl", "watchlist.jsonl"] {
        std::fs::write(dir.path().join(name), "").unwrap();
    }
    let err = failure(dir.path(), &["report"]);
    assert_eq!(err["error"]["kind"], "empty_corpus");
    assert_eq!(err["error"]["message"], "empty corpus");
}

#[test]
fn missing_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let err = failure(dir.path(), &["cluster"]);
    assert_eq!(err["error"]["kind"], "missing_input");
    assert!(err["error"]["path"].as_str().unwrap().ends_with("faces.jsonl"));
}

#[test]
fn stages_need_their_predecessors() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let err = failure(dir.path(), &["build-graph"]);
    assert_eq!(err["error"]["kind"], "missing_input");
    assert!(err["error"]["path"].as_str().unwrap().ends_with("clusters.jsonl"));
}

#[test]
fn tune_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let summary = ok(dir.path(), &["tune"]);
    assert_eq!(summary["grid_points"], 41);
    assert!(summary["best"]["ami"].as_f64().unwrap() >= 0.95);
    let text = std::fs::read_to_string(dir.path().join("tuning.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap() == "cutoff,rand,ami,fraction_clustered");
    assert_eq!(text.lines().count(), 43);
}

fn full_run(dir: &Path) {
    let c = corpus(dir);
    let report = ok(dir, &["report", "--config", c]);
    assert_eq!(report["graph"]["nodes"], 30);
    assert!(report["topology"]["lcc_node_count"].as_u64().unwrap() > 0);
    assert!(report["tiers"]["tiers"].as_array().unwrap().len() == 5);
    ok(dir, &["robustness", "--config", c]);
    for format in ["csv", "json"] {
        ok(dir, &["build-graph", "--config", c, "--format", format]);
    }
}

const OUTPUTS: [&str; 18] = [
    "faces.jsonl",
    "images.jsonl",
    "watchlist.jsonl",
    "truth.jsonl",
    "clusters.jsonl",
    "cluster_summary.json",
    "graph.graphml",
    "graph.csv",
    "graph.nodes.csv",
    "graph.json",
    "graph_summary.json",
    "metrics.csv",
    "topology.json",
    "robustness.csv",
    "matches.jsonl",
    "tier_summary.json",
    "regression.json",
    "report.json",
];

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    full_run(a.path());
    full_run(b.path());
    for name in OUTPUTS.iter().chain(&["ergm_report.json", "gof.csv", "regression_exclude_red.json"]) {
        let x = std::fs::read(a.path().join(name)).unwrap_or_else(|_| panic!("{name} missing"));
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn report_bundles_headline_sections() {
    let dir = tempfile::tempdir().unwrap();
    let config = corpus(dir.path());
    let report = ok(dir.path(), &["report", "--config", config]);
    for key in ["clustering", "graph", "topology", "tiers", "regression", "regression_exclude_red", "ergm"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let ergm = &report["ergm"];
    let fitted = ergm["models"].as_array().unwrap();
    let failed = ergm["failures"].as_array().unwrap();
    assert_eq!(fitted.len() + failed.len(), 2);
    let exact = fitted.iter().find(|m| m["name"] == "dyad_independent").expect("exact model fits");
    assert_eq!(exact["method"], "exact");
    let aic = exact["aic"].as_f64().unwrap();
    let ll = exact["log_likelihood"].as_f64().unwrap();
    assert_eq!(aic, 2.0 * 3.0 - 2.0 * ll);
    let gof = std::fs::read_to_string(dir.path().join("gof.csv")).unwrap();
    assert_eq!(gof.lines().nth(1).unwrap(), "model,degree,observed,min,q1,median,q3,max");

    let skipped = ok(dir.path(), &["report", "--config", config, "--skip-ergm"]);
    assert!(skipped["ergm"].is_null());
}

#[test]
fn outputs_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let config = corpus(dir.path());
    ok(dir.path(), &["report", "--config", config, "--skip-ergm"]);
    let clusters = std::fs::read_to_string(dir.path().join("clusters.jsonl")).unwrap();
    let first: Value = serde_json::from_str(clusters.lines().next().unwrap()).unwrap();
    assert_eq!(first["provenance"]["seed"], 21);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("# config_digest="));
    let graph = std::fs::read_to_string(dir.path().join("graph.graphml")).unwrap();
    assert!(graph.contains(first["provenance"]["config_digest"].as_str().unwrap()));
}
