use std::collections::BTreeMap;

use coappear_core::build::{build_coappearance_graph, CoAppearanceGraph, PersonNode};
use coappear_core::cluster::{chinese_whispers, ClusterAssignment, SimilarityGraph};
use coappear_core::metrics::{centrality_report, EigenOptions};
use coappear_core::model::{ImageRecord, Tier, WatchlistEntry};
use coappear_core::synth::{generate, SynthConfig};
use coappear_core::watchlist::{
    match_by_face, match_by_name, normalize_name, tier_summary, MatchMethod, MatchResult, NodeName,
};

fn clustered(
    seed: u64,
    identities: usize,
    watchlisted: usize,
) -> (coappear_core::synth::SynthCorpus, ClusterAssignment) {
    let corpus = generate(&SynthConfig {
        identities,
        faces_per_identity: 8,
        watchlisted,
        decoys: 6,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let sim = SimilarityGraph::build(&corpus.faces, 0.39).unwrap();
    let assignment = chinese_whispers(&sim, 100, seed).unwrap();
    (corpus, assignment)
}

#[test]
fn face_matches_equal_brute_force_nearest_cluster() {
    let (corpus, assignment) = clustered(17, 10, 5);
    let members: Vec<(usize, &coappear_core::model::Embedding)> =
        corpus.faces.iter().zip(assignment.labels()).filter_map(|(f, l)| l.map(|c| (c, &f.embedding))).collect();
    let matches = match_by_face(members.iter().copied(), &corpus.watchlist, 0.39).unwrap();
    assert_eq!(matches.len(), 5);
    for m in &matches {
        let entry = corpus.watchlist.iter().find(|e| e.entry_id == m.entry_id).unwrap();
        let probe = entry.embedding.as_ref().unwrap();
        let (mut best, mut best_cluster) = (f64::INFINITY, usize::MAX);
        for (c, e) in &members {
            let d = probe.distance(e);
            if d < best || (d == best && *c < best_cluster) {
                best = d;
                best_cluster = *c;
            }
        }
        assert_eq!(m.cluster_id, best_cluster);
        assert_eq!(m.distance, Some(best));
        // the matched cluster is the planted identity behind the entry
        let identity = corpus.listed_identity[&m.entry_id];
        let face = corpus.faces.iter().zip(assignment.labels()).find(|(_, l)| **l == Some(m.cluster_id)).unwrap().0;
        assert_eq!(corpus.identity_of[&face.face_id], identity);
    }
}

#[test]
fn face_distance_is_symmetric_in_sides() {
    let (corpus, _) = clustered(5, 6, 6);
    for entry in corpus.watchlist.iter().filter(|e| e.embedding.is_some()) {
        for f in &corpus.faces {
            let a = entry.embedding.as_ref().unwrap().distance(&f.embedding);
            let b = f.embedding.distance(entry.embedding.as_ref().unwrap());
            assert_eq!(a, b);
        }
    }
}

#[test]
fn name_matches_equal_linear_scan() {
    let entries: Vec<WatchlistEntry> = [("a", "Ekrem", "Güney"), ("b", "Zeynep", "Kaya"), ("c", "Ali", "Veli")]
        .iter()
        .map(|(id, f, l)| WatchlistEntry {
            entry_id: id.to_string(),
            first_name: f.to_string(),
            last_name: l.to_string(),
            tier: Tier::Orange,
            reward: 1000.0,
            embedding: None,
        })
        .collect();
    let sidecar = vec![
        NodeName { cluster_id: 0, first_name: "EKREM".into(), last_name: "guney".into() },
        NodeName { cluster_id: 1, first_name: "Zeynep".into(), last_name: "Kaya".into() },
        NodeName { cluster_id: 2, first_name: "Ali".into(), last_name: "Velioğlu".into() },
    ];
    let got = match_by_name(&sidecar, &entries);
    let mut scan = Vec::new();
    for e in &entries {
        for n in &sidecar {
            if normalize_name(&n.first_name) == normalize_name(&e.first_name)
                && normalize_name(&n.last_name) == normalize_name(&e.last_name)
            {
                scan.push((e.entry_id.clone(), n.cluster_id));
            }
        }
    }
    assert_eq!(got.len(), 2);
    assert_eq!(got.iter().map(|m| (m.entry_id.clone(), m.cluster_id)).collect::<Vec<_>>(), scan);
}

#[test]
fn tier_summary_matches_hand_aggregation() {
    // nodes: 0 -- 1 -- 2, 3 isolated
    let mut nodes: Vec<PersonNode> = (0..4).map(PersonNode::new).collect();
    for (i, count) in [3usize, 5, 1, 2].iter().enumerate() {
        for k in 0..*count {
            nodes[i].image_ids.insert(format!("img{i}-{k}"));
        }
    }
    let graph = CoAppearanceGraph::new(nodes, [(0, 1, 2), (1, 2, 1)]).unwrap();
    let report = centrality_report(&graph, EigenOptions::default()).unwrap();
    let entry = |id: &str, tier: Tier| WatchlistEntry {
        entry_id: id.into(),
        first_name: "x".into(),
        last_name: id.into(),
        tier,
        reward: 1.0,
        embedding: None,
    };
    let entries = vec![
        entry("r1", Tier::Red),
        entry("r2", Tier::Red),
        entry("r3", Tier::Red),
        entry("g1", Tier::Grey),
        entry("g2", Tier::Grey),
        entry("b1", Tier::Blue),
    ];
    let m = |e: &str, c: usize| MatchResult {
        cluster_id: c,
        entry_id: e.into(),
        method: MatchMethod::Face,
        distance: Some(0.1),
        review_required: true,
    };
    let matches = vec![m("r1", 1), m("r2", 0), m("g1", 3), m("g2", 99)];
    let table = tier_summary(&matches, &entries, &graph, &report).unwrap();
    let red = &table[0];
    assert_eq!((red.listed, red.matched), (3, 2));
    assert_eq!(red.percent_matched, 2.0 / 3.0 * 100.0);
    assert_eq!(red.mean_image_count, Some(4.0));
    assert_eq!(red.percent_isolates, Some(0.0));
    // degree centrality: node 1 has 2/3, node 0 has 1/3
    assert!((red.mean_degree.unwrap() - 0.5).abs() < 1e-12);
    assert!((red.mean_betweenness.unwrap() - 0.5).abs() < 1e-12);
    let blue = &table[1];
    assert_eq!((blue.listed, blue.matched, blue.percent_matched), (1, 0, 0.0));
    assert_eq!(blue.mean_image_count, None);
    assert_eq!(blue.mean_degree, None);
    let grey = &table[4];
    assert_eq!((grey.listed, grey.matched), (2, 1));
    assert_eq!(grey.percent_matched, 50.0);
    assert_eq!(grey.percent_isolates, Some(100.0));
    assert_eq!(grey.mean_image_count, Some(2.0));
}

#[test]
fn paper_red_tier_percentage() {
    let pct: f64 = 28.0 / 178.0 * 100.0;
    assert!((pct - 15.7).abs() < 0.05);
}

#[test]
fn graph_nodes_pick_up_tiers() {
    let (corpus, assignment) = clustered(3, 8, 4);
    let images: BTreeMap<String, ImageRecord> = corpus.images.iter().map(|i| (i.image_id.clone(), i.clone())).collect();
    let (mut graph, _) = build_coappearance_graph(&assignment, &corpus.faces, &images).unwrap();
    let members: Vec<_> =
        corpus.faces.iter().zip(assignment.labels()).filter_map(|(f, l)| l.map(|c| (c, &f.embedding))).collect();
    let matches = match_by_face(members.iter().copied(), &corpus.watchlist, 0.39).unwrap();
    coappear_core::watchlist::apply_matches(&mut graph, &matches, &corpus.watchlist).unwrap();
    let tagged = graph.nodes().iter().filter(|n| n.tier.is_some()).count();
    assert_eq!(tagged, 4);
}
