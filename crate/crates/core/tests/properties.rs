use std::collections::BTreeMap;

use coappear_core::build::build_coappearance_graph;
use coappear_core::cluster::{adjusted_mutual_info, chinese_whispers, rand_index, ClusterAssignment, SimilarityGraph};
use coappear_core::ergm::{fit_ergm, ErgmModel, FitConfig, MissingPolicy, NodeAttributes, Term};
use coappear_core::graph::Graph;
use coappear_core::inference::ols_fit;
use coappear_core::metrics::{betweenness_centrality, degree_centrality, Weighting};
use coappear_core::model::{Embedding, FaceRecord, ImageRecord, EMBEDDING_DIM};
use coappear_core::robustness::relative_lcc_after_removal;
use coappear_core::synth::{generate, SynthConfig};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if bits[k] {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            Graph::from_edges(n, &edges)
        })
    })
}

fn point(x: f64, y: f64) -> Embedding {
    let mut a = [0.0; EMBEDDING_DIM];
    a[0] = x;
    a[1] = y;
    Embedding::from_array(a)
}

fn same_partition(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (None, None) => true,
        (Some(x), Some(y)) => *fwd.entry(*x).or_insert(*y) == *y && *back.entry(*y).or_insert(*x) == *x,
        _ => false,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rand_and_ami_are_symmetric(a in proptest::collection::vec(0usize..4, 2..30), seed in any::<u64>()) {
        let b: Vec<usize> = a.iter().enumerate().map(|(i, x)| (x + (seed as usize >> (i % 16)) % 3) % 5).collect();
        let r = rand_index(&a, &b);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(r, rand_index(&b, &a));
        prop_assert!((adjusted_mutual_info(&a, &b) - adjusted_mutual_info(&b, &a)).abs() < 1e-12);
        prop_assert_eq!(rand_index(&a, &a), 1.0);
        let relabelled: Vec<usize> = a.iter().map(|x| 10 - x).collect();
        prop_assert!((adjusted_mutual_info(&a, &relabelled) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chinese_whispers_recovers_separated_cliques(sizes in proptest::collection::vec(2usize..7, 1..6), seed in any::<u64>()) {
        let mut faces = Vec::new();
        let mut truth = Vec::new();
        for (c, &s) in sizes.iter().enumerate() {
            for k in 0..s {
                faces.push(FaceRecord::new(format!("f{c}-{k}"), "img", point(c as f64 * 10.0, k as f64 * 0.01)));
                truth.push(Some(c));
            }
        }
        let sim = SimilarityGraph::build(&faces, 0.39).unwrap();
        let a = chinese_whispers(&sim, 100, seed).unwrap();
        prop_assert!(same_partition(a.labels(), &truth));
    }

    #[test]
    fn similarity_edges_grow_with_cutoff(xs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..25), c1 in 0.01f64..0.5, extra in 0.0f64..0.5) {
        let faces: Vec<FaceRecord> = xs.iter().enumerate().map(|(i, &(x, y))| FaceRecord::new(format!("f{i}"), "img", point(x, y))).collect();
        let small = SimilarityGraph::build(&faces, c1).unwrap();
        let large = SimilarityGraph::build(&faces, c1 + extra + 1e-9).unwrap();
        let big: std::collections::BTreeSet<(usize, usize)> = large.edges().map(|(u, v, _)| (u, v)).collect();
        for (u, v, d) in small.edges() {
            prop_assert!(d < c1);
            prop_assert!(big.contains(&(u, v)));
        }
        let restricted = large.restrict(c1).unwrap();
        prop_assert_eq!(restricted.edge_count(), small.edge_count());
    }

    #[test]
    fn weight_sum_counts_cluster_pairs_per_image(seed in any::<u64>(), identities in 3usize..20, faces in 2usize..8) {
        let corpus = generate(&SynthConfig { identities, faces_per_identity: faces, seed, ..SynthConfig::default() }).unwrap();
        let ids: Vec<String> = corpus.faces.iter().map(|f| f.face_id.clone()).collect();
        let labels = corpus.planted_labels().into_iter().map(Some).collect();
        let assignment = ClusterAssignment::from_labels(ids, labels).unwrap();
        let images: BTreeMap<String, ImageRecord> = corpus.images.iter().map(|i| (i.image_id.clone(), i.clone())).collect();
        let (graph, _) = build_coappearance_graph(&assignment, &corpus.faces, &images).unwrap();
        let mut per_image: BTreeMap<&str, std::collections::BTreeSet<usize>> = BTreeMap::new();
        for f in &corpus.faces {
            per_image.entry(&f.image_id).or_default().insert(corpus.identity_of[&f.face_id]);
        }
        let expected: u64 = per_image.values().map(|s| (s.len() * s.len().saturating_sub(1) / 2) as u64).sum();
        prop_assert_eq!(graph.total_weight(), expected);
        prop_assert_eq!(graph.node_count(), identities);
    }

    #[test]
    fn centralities_are_bounded_and_label_free(g in graph_strategy(10), shift in 1usize..9) {
        let n = g.node_count();
        let b = betweenness_centrality(&g);
        prop_assert!(b.iter().all(|x| (-1e-12..=1.0 + 1e-12).contains(x)));
        let d = degree_centrality(&g, Weighting::Unweighted).unwrap();
        prop_assert!(d.iter().all(|x| (0.0..=1.0).contains(x)));
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let edges: Vec<(usize, usize)> = g.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        let h = Graph::from_edges(n, &edges);
        let bh = betweenness_centrality(&h);
        for u in 0..n {
            prop_assert!((b[u] - bh[perm[u]]).abs() < 1e-12);
        }
    }

    #[test]
    fn relative_lcc_is_a_fraction(g in graph_strategy(12), picks in proptest::collection::vec(0usize..12, 0..12)) {
        prop_assume!(g.edge_count() > 0);
        let removed: Vec<usize> = picks.into_iter().filter(|&u| u < g.node_count()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let r = relative_lcc_after_removal(&g, &removed).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(relative_lcc_after_removal(&g, &[]).unwrap(), 1.0);
    }

    #[test]
    fn ols_recovers_noiseless_lines(a in -50.0f64..50.0, b in -5.0f64..5.0, xs in proptest::collection::btree_set(-1000i32..1000, 3..40)) {
        prop_assume!(b.abs() > 1e-3);
        let x: Vec<f64> = xs.iter().map(|&v| v as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let fit = ols_fit(&y, &x).unwrap();
        prop_assert!((fit.intercept() - a).abs() < 1e-8 * (1.0 + a.abs()));
        prop_assert!((fit.slope() - b).abs() < 1e-9 * (1.0 + b.abs()));
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ergm_information_criteria_identities(g in graph_strategy(14)) {
        let n = g.node_count();
        prop_assume!(g.edge_count() > 0 && g.edge_count() < n * (n - 1) / 2);
        let attrs = NodeAttributes::new().with_numeric("x", (0..n).map(|i| Some(i as f64 / n as f64)).collect());
        let model = ErgmModel::new(&[Term::Edges, Term::node_covariate("x")], n, &attrs, MissingPolicy::Reject).unwrap();
        if let Ok(fit) = fit_ergm(&g, &model, &FitConfig::default()) {
            let p = fit.theta.len() as f64;
            prop_assert_eq!(fit.aic, 2.0 * p - 2.0 * fit.log_likelihood);
            prop_assert_eq!(fit.bic, p * coappear_core::math::ln(fit.dyad_count as f64) - 2.0 * fit.log_likelihood);
            prop_assert!(fit.standard_errors.iter().all(|s| *s > 0.0));
        }
    }
}
