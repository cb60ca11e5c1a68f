//! Static robustness: how much of the largest connected component survives
//! when sets of nodes are deleted.
//!
//! Each trial draws from its own ChaCha stream `(seed, trial)`, so results do
//! not depend on how trials are scheduled.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::Graph;
use crate::metrics::{betweenness_centrality, degree_centrality, eigenvector_centrality, EigenOptions, Weighting};
use crate::{rng, Error, Result};

/// Size of the candidate pool used by the opportunistic strategy by default.
pub const DEFAULT_POOL_SIZE: usize = 30;
pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalStrategy {
    Random,
    OpportunisticTopK,
}

impl fmt::Display for RemovalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RemovalStrategy::Random => "random",
            RemovalStrategy::OpportunisticTopK => "opportunistic_topk",
        })
    }
}

/// Centrality that ranks the opportunistic candidate pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolCentrality {
    Degree,
    Eigenvector,
    #[default]
    Betweenness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalTrialResult {
    pub strategy: RemovalStrategy,
    /// Pool size for the opportunistic strategy.
    pub k: Option<usize>,
    pub removed: usize,
    pub trials: usize,
    /// Relative LCC size per trial, in trial order.
    pub samples: Vec<f64>,
}

impl RemovalTrialResult {
    pub fn mean(&self) -> f64 {
        crate::math::mean(&self.samples)
    }
}

/// `LCC(after) / LCC(before)` once `removed` nodes are deleted; 0 when
/// nothing is left.
pub fn relative_lcc_after_removal(g: &Graph, removed: &[usize]) -> Result<f64> {
    let before = g.largest_component().len();
    if before == 0 {
        return Err(Error::InvalidParameter("graph is empty".into()));
    }
    Ok(relative(g, removed, before))
}

fn relative(g: &Graph, removed: &[usize], before: usize) -> f64 {
    let mut mask = vec![false; g.node_count()];
    for &u in removed {
        mask[u] = true;
    }
    g.largest_component_size_masked(&mask) as f64 / before as f64
}

fn check(g: &Graph, trials: usize) -> Result<usize> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let before = g.largest_component().len();
    if before == 0 {
        return Err(Error::InvalidParameter("graph is empty".into()));
    }
    Ok(before)
}

/// Deletes `count` uniformly chosen nodes per trial.
pub fn remove_random_nodes(g: &Graph, count: usize, trials: usize, seed: u64) -> Result<RemovalTrialResult> {
    let n = g.node_count();
    if count > n {
        return Err(Error::RemovalOutOfRange { requested: count, available: n });
    }
    let before = check(g, trials)?;
    let samples = (0..trials)
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let picks = rand::seq::index::sample(&mut r, n, count).into_vec();
            relative(g, &picks, before)
        })
        .collect();
    Ok(RemovalTrialResult { strategy: RemovalStrategy::Random, k: None, removed: count, trials, samples })
}

/// The `k` most central nodes, highest first; ties go to the lower node id.
pub fn top_k_pool(g: &Graph, k: usize, centrality: PoolCentrality) -> Result<Vec<usize>> {
    let n = g.node_count();
    if k > n {
        return Err(Error::RemovalOutOfRange { requested: k, available: n });
    }
    let scores = match centrality {
        PoolCentrality::Degree => degree_centrality(g, Weighting::Unweighted)?,
        PoolCentrality::Eigenvector => eigenvector_centrality(g, EigenOptions::default())?,
        PoolCentrality::Betweenness => betweenness_centrality(g),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

/// Per trial, deletes a uniform `removed`-subset of the top-`k` pool ranked
/// once on the intact graph.
pub fn opportunistic_topk_removal(
    g: &Graph,
    k: usize,
    removed: usize,
    trials: usize,
    centrality: PoolCentrality,
    seed: u64,
) -> Result<RemovalTrialResult> {
    if removed > k {
        return Err(Error::RemovalOutOfRange { requested: removed, available: k });
    }
    let pool = top_k_pool(g, k, centrality)?;
    let before = check(g, trials)?;
    let samples = (0..trials)
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let picks: Vec<usize> = rand::seq::index::sample(&mut r, k, removed).into_iter().map(|i| pool[i]).collect();
            relative(g, &picks, before)
        })
        .collect();
    Ok(RemovalTrialResult { strategy: RemovalStrategy::OpportunisticTopK, k: Some(k), removed, trials, samples })
}
