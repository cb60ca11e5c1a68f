use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::terms::ErgmModel;
use crate::graph::Graph;
use crate::math::{exp, ln, pairs};
use crate::rng::{seeded, Rng};
use crate::{Error, Result};

/// Chain lengths, in proposed toggles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub interval: usize,
    pub samples: usize,
    /// Keep a copy of the graph at every sample.
    pub keep_graphs: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { burn_in: 100_000, interval: 1_000, samples: 1_000, keep_graphs: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    /// `g(y)` at each sample.
    pub statistics: Vec<Vec<f64>>,
    pub edge_counts: Vec<usize>,
    pub graphs: Vec<Graph>,
    pub acceptance_rate: f64,
    pub final_graph: Graph,
}

impl SampleOutput {
    pub fn mean_statistics(&self) -> Vec<f64> {
        let p = self.statistics.first().map_or(0, Vec::len);
        let mut m = vec![0.0; p];
        for s in &self.statistics {
            for (a, b) in m.iter_mut().zip(s) {
                *a += b;
            }
        }
        let n = self.statistics.len().max(1) as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    pub fn mean_density(&self, dyads: usize) -> f64 {
        let n = self.edge_counts.len().max(1) as f64;
        self.edge_counts.iter().sum::<usize>() as f64 / n / dyads as f64
    }
}

// Graph plus an indexable edge list for uniform edge proposals.
struct ChainState {
    graph: Graph,
    edges: Vec<(usize, usize)>,
    position: BTreeMap<(usize, usize), usize>,
}

impl ChainState {
    fn new(graph: Graph) -> Self {
        let edges: Vec<(usize, usize)> = graph.edges().collect();
        let position = edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        Self { graph, edges, position }
    }

    fn toggle(&mut self, i: usize, j: usize) {
        let key = (i.min(j), i.max(j));
        if self.graph.remove_edge(i, j) {
            let k = self.position.remove(&key).expect("edge index out of sync");
            self.edges.swap_remove(k);
            if k < self.edges.len() {
                self.position.insert(self.edges[k], k);
            }
        } else {
            self.graph.add_edge(i, j, 1.0);
            self.position.insert(key, self.edges.len());
            self.edges.push(key);
        }
    }
}

// Tie/no-tie proposal: with probability 1/2 (when the graph has edges) toggle
// a uniformly chosen edge, otherwise a uniformly chosen dyad.
fn proposal_probability(present: bool, edge_count: usize, dyads: f64) -> f64 {
    if edge_count == 0 {
        return 1.0 / dyads;
    }
    let on_edge = if present { 0.5 / edge_count as f64 } else { 0.0 };
    on_edge + 0.5 / dyads
}

struct Chain<'a> {
    model: &'a ErgmModel,
    theta: &'a [f64],
    state: ChainState,
    stats: Vec<f64>,
    delta: Vec<f64>,
    dyads: f64,
    rng: Rng,
    accepted: usize,
    proposed: usize,
}

impl Chain<'_> {
    fn step(&mut self) {
        let n = self.model.node_count();
        let m = self.state.edges.len();
        let (i, j) = if m > 0 && self.rng.gen_bool(0.5) {
            self.state.edges[self.rng.gen_range(0..m)]
        } else {
            let i = self.rng.gen_range(0..n);
            let mut j = self.rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        };
        let present = self.state.graph.has_edge(i, j);
        self.model.change_into(&self.state.graph, i, j, &mut self.delta);
        let sign = if present { -1.0 } else { 1.0 };
        let log_ratio: f64 = sign * self.theta.iter().zip(&self.delta).map(|(t, d)| t * d).sum::<f64>();
        let m_after = if present { m - 1 } else { m + 1 };
        let forward = proposal_probability(present, m, self.dyads);
        let reverse = proposal_probability(!present, m_after, self.dyads);
        let log_accept = log_ratio + ln(reverse) - ln(forward);
        self.proposed += 1;
        if log_accept >= 0.0 || self.rng.gen::<f64>() < exp(log_accept) {
            self.state.toggle(i, j);
            for (s, d) in self.stats.iter_mut().zip(&self.delta) {
                *s += sign * d;
            }
            self.accepted += 1;
        }
    }
}

/// Metropolis-Hastings sample from the model at `theta`, starting from
/// `start` (the empty graph when `None`).
pub fn mcmc_sample(
    model: &ErgmModel,
    theta: &[f64],
    start: Option<&Graph>,
    config: &SamplerConfig,
    seed: u64,
) -> Result<SampleOutput> {
    let n = model.node_count();
    if n < 2 {
        return Err(Error::InvalidParameter("sampling needs at least two nodes".into()));
    }
    if theta.len() != model.dimension() {
        return Err(Error::LengthMismatch { left: theta.len(), right: model.dimension() });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite parameter".into()));
    }
    if config.samples == 0 || config.interval == 0 {
        return Err(Error::InvalidParameter("samples and interval must be positive".into()));
    }
    let graph = match start {
        Some(g) if g.node_count() != n => return Err(Error::LengthMismatch { left: g.node_count(), right: n }),
        Some(g) => g.clone(),
        None => Graph::new(n),
    };
    let stats = model.statistics(&graph);
    let mut chain = Chain {
        model,
        theta,
        state: ChainState::new(graph),
        stats,
        delta: vec![0.0; model.dimension()],
        dyads: pairs(n),
        rng: seeded(seed),
        accepted: 0,
        proposed: 0,
    };
    for _ in 0..config.burn_in {
        chain.step();
    }
    let mut out = SampleOutput {
        statistics: Vec::with_capacity(config.samples),
        edge_counts: Vec::with_capacity(config.samples),
        graphs: Vec::new(),
        acceptance_rate: 0.0,
        final_graph: Graph::new(0),
    };
    for _ in 0..config.samples {
        for _ in 0..config.interval {
            chain.step();
        }
        out.statistics.push(chain.stats.clone());
        out.edge_counts.push(chain.state.edges.len());
        if config.keep_graphs {
            out.graphs.push(chain.state.graph.clone());
        }
    }
    out.acceptance_rate = chain.accepted as f64 / chain.proposed.max(1) as f64;
    out.final_graph = chain.state.graph;
    Ok(out)
}

/// Effective sample size of a scalar chain (initial positive sequence
/// estimator on the autocorrelations).
pub(crate) fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return n as f64;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let c0 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if !(c0 > 0.0) {
        return n as f64;
    }
    let acf = |lag: usize| -> f64 {
        (0..n - lag).map(|t| (xs[t] - mean) * (xs[t + lag] - mean)).sum::<f64>() / n as f64 / c0
    };
    let mut tau = 1.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (n as f64 / tau).min(n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergm::{MissingPolicy, NodeAttributes, Term};

    fn edges_model(n: usize) -> ErgmModel {
        ErgmModel::new(&[Term::Edges], n, &NodeAttributes::new(), MissingPolicy::Reject).unwrap()
    }

    #[test]
    fn running_statistics_match_recount() {
        let model = ErgmModel::new(
            &[Term::Edges, Term::Isolates, Term::Gwesp { decay: 0.25 }],
            12,
            &NodeAttributes::new(),
            MissingPolicy::Reject,
        )
        .unwrap();
        let cfg = SamplerConfig { burn_in: 500, interval: 37, samples: 50, keep_graphs: true };
        let out = mcmc_sample(&model, &[-1.0, 0.3, 0.4], None, &cfg, 5).unwrap();
        for (s, g) in out.statistics.iter().zip(&out.graphs) {
            let exact = model.statistics(g);
            for (a, b) in s.iter().zip(&exact) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_parameters_give_half_density() {
        let model = edges_model(30);
        let cfg = SamplerConfig { burn_in: 5_000, interval: 50, samples: 2_000, keep_graphs: false };
        let out = mcmc_sample(&model, &[0.0], None, &cfg, 1).unwrap();
        assert!((out.mean_density(model.dyad_count()) - 0.5).abs() < 0.01);
    }

    #[test]
    fn deterministic_under_seed() {
        let model = edges_model(10);
        let cfg = SamplerConfig { burn_in: 100, interval: 10, samples: 20, keep_graphs: false };
        let a = mcmc_sample(&model, &[-1.0], None, &cfg, 9).unwrap();
        let b = mcmc_sample(&model, &[-1.0], None, &cfg, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ess_of_independent_draws_is_near_n() {
        let mut rng = seeded(3);
        let xs: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
        let ess = effective_sample_size(&xs);
        assert!(ess > 1500.0, "{ess}");
        let sticky: Vec<f64> = (0..2000).map(|t| (t / 100) as f64).collect();
        assert!(effective_sample_size(&sticky) < 100.0);
    }
}
