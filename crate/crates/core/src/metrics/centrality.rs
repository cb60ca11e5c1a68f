use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::build::CoAppearanceGraph;
use crate::graph::Graph;
use crate::math::{abs, sqrt};
use crate::{Error, Result};

/// Whether edge co-appearance counts enter a centrality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Unweighted,
    Weighted,
}

/// `k_i / (n - 1)`. In weighted mode the neighbour count is replaced by the
/// node strength divided by the largest edge weight.
pub fn degree_centrality(g: &Graph, weighting: Weighting) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::InvalidParameter("degree centrality needs at least 2 nodes".into()));
    }
    let denom = (n - 1) as f64;
    Ok(match weighting {
        Weighting::Unweighted => (0..n).map(|u| g.degree(u) as f64 / denom).collect(),
        Weighting::Weighted => {
            let max_w = (0..n).flat_map(|u| g.neighbor_weights(u).iter().copied()).fold(0.0, f64::max);
            (0..n)
                .map(|u| if max_w == 0.0 { 0.0 } else { g.neighbor_weights(u).iter().sum::<f64>() / max_w / denom })
                .collect()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Stop when the L2 change between iterates falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub weighting: Weighting,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 10_000, weighting: Weighting::Unweighted }
    }
}

/// Principal eigenvector of the adjacency matrix restricted to the largest
/// connected component, unit L2 norm, non-negative. Nodes outside the LCC
/// get 0.
///
/// Power iteration runs on `A + I`, which has the same eigenvectors but a
/// strictly dominant top eigenvalue even for bipartite components.
pub fn eigenvector_centrality(g: &Graph, opts: EigenOptions) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::InvalidParameter("eigenvector centrality of an empty graph".into()));
    }
    let lcc = g.largest_component();
    let mut in_lcc = vec![false; n];
    for &u in &lcc {
        in_lcc[u] = true;
    }
    let mut x = vec![0.0; n];
    let init = 1.0 / sqrt(lcc.len() as f64);
    for &u in &lcc {
        x[u] = init;
    }
    let mut next = vec![0.0; n];
    for _ in 0..opts.max_iterations {
        for &u in &lcc {
            let mut acc = x[u];
            for (&v, &w) in g.neighbors(u).iter().zip(g.neighbor_weights(u)) {
                acc += match opts.weighting {
                    Weighting::Unweighted => x[v],
                    Weighting::Weighted => w * x[v],
                };
            }
            next[u] = acc;
        }
        let norm = sqrt(lcc.iter().map(|&u| next[u] * next[u]).sum());
        let mut change = 0.0;
        for &u in &lcc {
            let v = next[u] / norm;
            change += (v - x[u]) * (v - x[u]);
            x[u] = v;
        }
        if sqrt(change) < opts.tolerance {
            let max = lcc.iter().map(|&u| x[u]).fold(0.0, f64::max);
            for v in &mut x {
                *v = abs(*v / max);
            }
            let norm = sqrt(x.iter().map(|v| v * v).sum());
            for v in &mut x {
                *v /= norm;
            }
            return Ok(x);
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iterations })
}

/// Brandes betweenness over unweighted shortest paths, each node normalised
/// by `(c - 1)(c - 2) / 2` where `c` is the size of its component.
pub fn betweenness_centrality(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut bc = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        stack.clear();
        for u in 0..n {
            preds[u].clear();
            sigma[u] = 0.0;
            dist[u] = usize::MAX;
            delta[u] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    let mut comp_size = vec![0usize; n];
    for c in g.components() {
        for &u in &c {
            comp_size[u] = c.len();
        }
    }
    for (u, b) in bc.iter_mut().enumerate() {
        let c = comp_size[u];
        // each unordered pair was counted from both ends
        *b = if c < 3 { 0.0 } else { *b / 2.0 / (((c - 1) * (c - 2)) as f64 / 2.0) };
    }
    bc
}

/// Per-node centralities of a co-appearance graph, raw and divided by the
/// node's image count.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityReport {
    pub degree: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub standardized_degree: Vec<f64>,
    pub standardized_eigenvector: Vec<f64>,
    pub standardized_betweenness: Vec<f64>,
}

pub fn centrality_report(graph: &CoAppearanceGraph, opts: EigenOptions) -> Result<CentralityReport> {
    let g = graph.skeleton();
    let degree = degree_centrality(&g, opts.weighting)?;
    let eigenvector = eigenvector_centrality(&g, opts)?;
    let betweenness = betweenness_centrality(&g);
    let counts: Vec<f64> = graph.nodes().iter().map(|n| n.image_count().max(1) as f64).collect();
    let standardize = |xs: &[f64]| xs.iter().zip(&counts).map(|(x, c)| x / c).collect::<Vec<_>>();
    Ok(CentralityReport {
        standardized_degree: standardize(&degree),
        standardized_eigenvector: standardize(&eigenvector),
        standardized_betweenness: standardize(&betweenness),
        degree,
        eigenvector,
        betweenness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)])
    }

    #[test]
    fn degree_of_star() {
        let d = degree_centrality(&star(), Weighting::Unweighted).unwrap();
        assert_eq!(d, vec![1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let g = Graph::from_edges(3, &[(0, 1)]);
        assert_eq!(degree_centrality(&g, Weighting::Unweighted).unwrap()[2], 0.0);
        assert!(degree_centrality(&Graph::new(1), Weighting::Unweighted).is_err());
    }

    #[test]
    fn weighted_degree_uses_strength() {
        let g = Graph::from_weighted_edges(3, &[(0, 1, 4.0), (1, 2, 2.0)]);
        let d = degree_centrality(&g, Weighting::Weighted).unwrap();
        assert_eq!(d, vec![0.5, 0.75, 0.25]);
    }

    #[test]
    fn eigenvector_of_complete_graph_is_uniform() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let x = eigenvector_centrality(&g, EigenOptions::default()).unwrap();
        for v in x {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvector_path_middle_dominates() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let x = eigenvector_centrality(&g, EigenOptions::default()).unwrap();
        assert!(x[1] > x[0] && x[1] > x[2]);
        // exact: (1, sqrt2, 1) / 2
        assert!((x[1] - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn eigenvector_zero_outside_lcc() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (3, 4)]);
        let x = eigenvector_centrality(&g, EigenOptions::default()).unwrap();
        assert_eq!(x[3], 0.0);
        assert_eq!(x[4], 0.0);
        assert!(eigenvector_centrality(&Graph::new(0), EigenOptions::default()).is_err());
    }

    #[test]
    fn eigenvector_non_convergence_reported() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let opts = EigenOptions { max_iterations: 2, ..Default::default() };
        assert_eq!(eigenvector_centrality(&g, opts), Err(Error::NotConverged { iterations: 2 }));
    }

    #[test]
    fn betweenness_small_cases() {
        let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(betweenness_centrality(&p3), vec![0.0, 1.0, 0.0]);
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        for b in betweenness_centrality(&c4) {
            assert!((b - 1.0 / 6.0).abs() < 1e-15);
        }
        // leaves and isolates are zero
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3)]);
        let b = betweenness_centrality(&g);
        assert_eq!(&b[1..], &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(b[0], 1.0);
    }
}
