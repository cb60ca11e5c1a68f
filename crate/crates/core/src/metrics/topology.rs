use alloc::vec::Vec;

use super::generators::erdos_renyi_gnm;
use super::power_law::{fit_power_law, PowerLawFit};
use crate::build::CoAppearanceGraph;
use crate::graph::Graph;
use crate::math::mean;
use crate::{Error, Result};

/// Default number of random references averaged by [`small_world`].
pub const DEFAULT_REFERENCE_COUNT: usize = 20;
const MAX_REFERENCE_BATCHES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `2 E_i / (k_i (k_i - 1))`, 0 when `k_i < 2`.
    pub local: Vec<f64>,
    /// Mean over all nodes (0 for the empty graph).
    pub mean: f64,
}

/// Watts-Strogatz local clustering coefficients.
pub fn clustering_coefficient(g: &Graph) -> Clustering {
    let n = g.node_count();
    let local: Vec<f64> = (0..n)
        .map(|i| {
            let ns = g.neighbors(i);
            let k = ns.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (a, &u) in ns.iter().enumerate() {
                for &v in &ns[a + 1..] {
                    if g.has_edge(u, v) {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect();
    let mean = if n == 0 { 0.0 } else { mean(&local) };
    Clustering { local, mean }
}

/// Mean geodesic length over all unordered node pairs of a connected graph.
pub fn average_shortest_path(g: &Graph) -> Result<f64> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::InvalidParameter("average shortest path needs at least 2 nodes".into()));
    }
    let mut total = 0u64;
    for s in 0..n {
        for &d in &g.bfs_distances(s)[s + 1..] {
            if d == usize::MAX {
                return Err(Error::Disconnected);
            }
            total += d as u64;
        }
    }
    Ok(total as f64 / crate::math::pairs(n))
}

/// Small-world statistics of a graph against random references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallWorld {
    pub path_length: f64,
    pub clustering: f64,
    pub reference_path_length: f64,
    pub reference_clustering: f64,
    /// `L_g / L_rand`.
    pub lambda: f64,
    /// `C_g / C_rand`.
    pub gamma: f64,
    /// `gamma / lambda`.
    pub s: f64,
    pub references_used: usize,
}

/// Compares the LCC of `g` with the LCCs of the given reference graphs.
pub fn small_world_against(g: &Graph, references: &[Graph]) -> Result<SmallWorld> {
    if references.is_empty() {
        return Err(Error::InvalidParameter("no reference graphs".into()));
    }
    let (path_length, clustering) = lcc_stats(g)?;
    let mut ls = Vec::with_capacity(references.len());
    let mut cs = Vec::with_capacity(references.len());
    for r in references {
        let (l, c) = lcc_stats(r)?;
        ls.push(l);
        cs.push(c);
    }
    finish(path_length, clustering, mean(&ls), mean(&cs), references.len())
}

fn finish(path_length: f64, clustering: f64, l_rand: f64, c_rand: f64, used: usize) -> Result<SmallWorld> {
    if c_rand == 0.0 {
        return Err(Error::DegenerateSample("reference clustering is zero"));
    }
    let lambda = path_length / l_rand;
    let gamma = clustering / c_rand;
    Ok(SmallWorld {
        path_length,
        clustering,
        reference_path_length: l_rand,
        reference_clustering: c_rand,
        lambda,
        gamma,
        s: gamma / lambda,
        references_used: used,
    })
}

fn lcc_stats(g: &Graph) -> Result<(f64, f64)> {
    let lcc = g.induced(&g.largest_component());
    if lcc.node_count() < 2 {
        return Err(Error::InvalidParameter("largest component has fewer than 2 nodes".into()));
    }
    Ok((average_shortest_path(&lcc)?, clustering_coefficient(&lcc).mean))
}

/// Small-world S of the graph's LCC against `reference_count` seeded G(n, m)
/// graphs with the LCC's node and edge counts. If the averaged reference
/// clustering is zero, further batches are drawn (up to 10 in total).
pub fn small_world(g: &Graph, reference_count: usize, seed: u64) -> Result<SmallWorld> {
    if reference_count == 0 {
        return Err(Error::InvalidParameter("reference_count must be at least 1".into()));
    }
    let lcc = g.induced(&g.largest_component());
    if lcc.node_count() < 4 {
        return Err(Error::InvalidParameter("largest component needs at least 4 nodes".into()));
    }
    let (path_length, clustering) = lcc_stats(&lcc)?;
    let (n, m) = (lcc.node_count(), lcc.edge_count());
    let mut ls = Vec::new();
    let mut cs = Vec::new();
    for batch in 0..MAX_REFERENCE_BATCHES {
        for r in 0..reference_count {
            let idx = (batch * reference_count + r) as u64;
            let reference = erdos_renyi_gnm(n, m, seed.wrapping_add(idx.wrapping_mul(0x9E37_79B9_7F4A_7C15)))?;
            let (l, c) = lcc_stats(&reference)?;
            ls.push(l);
            cs.push(c);
        }
        if mean(&cs) > 0.0 {
            break;
        }
    }
    finish(path_length, clustering, mean(&ls), mean(&cs), ls.len())
}

/// Headline topology numbers of a co-appearance graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub lcc_node_count: usize,
    pub lcc_edge_count: usize,
    pub power_law: Option<PowerLawFit>,
    pub mean_clustering: f64,
    pub avg_shortest_path: f64,
    pub small_world: Option<SmallWorld>,
}

/// Power-law fit over all degrees (isolates drop out via `k_min >= 1`),
/// clustering and path length on the LCC, and small-world S. Fits that are
/// not possible on this graph are reported as `None`.
pub fn topology_report(
    graph: &CoAppearanceGraph,
    k_min: usize,
    reference_count: usize,
    seed: u64,
) -> Result<TopologyReport> {
    let g = graph.skeleton();
    let lcc = g.induced(&g.largest_component());
    if lcc.node_count() < 2 {
        return Err(Error::InvalidParameter("graph has no edges".into()));
    }
    Ok(TopologyReport {
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        lcc_node_count: lcc.node_count(),
        lcc_edge_count: lcc.edge_count(),
        power_law: fit_power_law(&g.degrees(), k_min).ok(),
        mean_clustering: clustering_coefficient(&lcc).mean,
        avg_shortest_path: average_shortest_path(&lcc)?,
        small_world: small_world(&lcc, reference_count, seed).ok(),
    })
}
