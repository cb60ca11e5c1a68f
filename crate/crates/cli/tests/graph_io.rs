use std::collections::BTreeSet;

use coappear::graph_io::{export_graph, import_graph, node_table_path, GraphFormat};
use coappear::io::{parse_timestamp, Provenance};
use coappear_core::build::{CoAppearanceGraph, PersonNode};
use coappear_core::model::{Gender, GenderEstimate, Tier};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FORMATS: [GraphFormat; 3] = [GraphFormat::Graphml, GraphFormat::Csv, GraphFormat::Json];

fn provenance() -> Provenance {
    Provenance { config_digest: "abc123".into(), seed: 9 }
}

fn round_trip(graph: &CoAppearanceGraph, format: GraphFormat) -> CoAppearanceGraph {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(format!("graph.{}", format.extension()));
    export_graph(graph, format, &path, &provenance()).unwrap();
    import_graph(&path).unwrap()
}

fn random_graph(seed: u64, n: usize) -> CoAppearanceGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tiers = [Tier::Red, Tier::Blue, Tier::Green, Tier::Orange, Tier::Grey];
    let nodes: Vec<PersonNode> = (0..n)
        .map(|k| {
            let mut node = PersonNode::new(3 * k + 1);
            let images = rng.gen_range(1..5);
            node.image_ids =
                (0..images).map(|i| format!("img-{k}-{i}{}", if i == 0 { "&<\"x\">" } else { "" })).collect();
            if rng.gen_bool(0.8) {
                node.first_seen =
                    parse_timestamp(&format!("2014-05-{:02}T07:{:02}:00Z", rng.gen_range(1..28), rng.gen_range(0..60)));
            }
            if rng.gen_bool(0.7) {
                node.age_estimate = Some(rng.gen_range(18.0..70.0));
            }
            if rng.gen_bool(0.6) {
                let label = if rng.gen_bool(0.5) { Gender::Female } else { Gender::Male };
                node.gender_estimate = Some(GenderEstimate { label, confidence: rng.gen() });
            }
            if rng.gen_bool(0.3) {
                let tier = tiers[rng.gen_range(0..5)];
                node.tier = Some(tier);
                node.reward = Some(rng.gen_range(500.0..10_000.0));
            }
            node
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.08) {
                edges.push((i, j, rng.gen_range(1..20)));
            }
        }
    }
    CoAppearanceGraph::new(nodes, edges).unwrap()
}

#[test]
fn empty_graph_exports_valid_graphml_without_nodes() {
    let graph = CoAppearanceGraph::new(Vec::new(), Vec::new()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.graphml");
    export_graph(&graph, GraphFormat::Graphml, &path, &provenance()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("<graphml"));
    assert!(text.contains("edgedefault=\"undirected\""));
    assert!(!text.contains("<node "));
    assert_eq!(import_graph(&path).unwrap(), graph);
}

#[test]
fn ten_co_appearances_give_weight_ten_in_every_format() {
    let nodes = vec![PersonNode::new(4), PersonNode::new(7)];
    let graph = CoAppearanceGraph::new(nodes, [(0, 1, 10)]).unwrap();
    for format in FORMATS {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(format!("g.{}", format.extension()));
        export_graph(&graph, format, &path, &provenance()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        match format {
            GraphFormat::Graphml => assert!(text.contains("<data key=\"weight\">10</data>"), "{text}"),
            GraphFormat::Csv => assert!(text.lines().any(|l| l == "4,7,10"), "{text}"),
            GraphFormat::Json => assert!(text.contains("\"weight\": 10"), "{text}"),
        }
        assert_eq!(import_graph(&path).unwrap().weight(0, 1), 10);
    }
}

#[test]
fn random_graphs_round_trip_in_every_format() {
    for seed in 0..5 {
        let graph = random_graph(seed, 50);
        for format in FORMATS {
            assert_eq!(round_trip(&graph, format), graph, "seed {seed} format {format:?}");
        }
    }
}

#[test]
fn graphml_carries_provenance_and_node_attributes() {
    let graph = random_graph(1, 6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.graphml");
    export_graph(&graph, GraphFormat::Graphml, &path, &provenance()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for key in
        ["image_count", "first_seen", "age_estimate", "gender_estimate", "reward", "tier", "weight", "config_digest"]
    {
        assert!(text.contains(&format!("attr.name=\"{key}\"")), "missing {key}");
    }
    assert!(text.contains("abc123"));
}

#[test]
fn csv_export_writes_node_table_beside_edges() {
    let graph = random_graph(2, 10);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let files = export_graph(&graph, GraphFormat::Csv, &path, &provenance()).unwrap();
    assert_eq!(files, vec![path.clone(), node_table_path(&path)]);
    let ids: BTreeSet<usize> = import_graph(&path).unwrap().nodes().iter().map(|n| n.cluster_id).collect();
    assert_eq!(ids, graph.nodes().iter().map(|n| n.cluster_id).collect());
}

#[test]
fn unknown_extension_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    std::fs::write(&path, "").unwrap();
    assert!(import_graph(&path).is_err());
}
