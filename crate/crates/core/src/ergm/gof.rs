use alloc::vec;
use alloc::vec::Vec;

use super::fit::ErgmFit;
use super::sampler::{mcmc_sample, SamplerConfig};
use super::terms::ErgmModel;
use crate::graph::Graph;
use crate::math::quantile_sorted;
use crate::{Error, Result};

/// Simulated node counts at one degree value, with the observed count.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeEnvelope {
    pub degree: usize,
    pub observed: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl DegreeEnvelope {
    pub fn contains_observed(&self) -> bool {
        let o = self.observed as f64;
        self.min <= o && o <= self.max
    }
}

fn degree_counts(g: &Graph) -> Vec<usize> {
    let mut counts = Vec::new();
    for d in g.degrees() {
        if d >= counts.len() {
            counts.resize(d + 1, 0);
        }
        counts[d] += 1;
    }
    counts
}

/// Simulates `n_sims` graphs at the fitted parameters (chain started at the
/// observed graph, `sampler.burn_in` then one graph every `sampler.interval`
/// toggles) and summarises the degree distribution per degree value.
pub fn ergm_gof(
    fit: &ErgmFit,
    model: &ErgmModel,
    observed: &Graph,
    n_sims: usize,
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<Vec<DegreeEnvelope>> {
    if !fit.converged {
        return Err(Error::NotConverged { iterations: fit.rounds });
    }
    if n_sims == 0 {
        return Err(Error::InvalidParameter("n_sims must be positive".into()));
    }
    let cfg = SamplerConfig { samples: n_sims, keep_graphs: true, ..*sampler };
    let out = mcmc_sample(model, &fit.theta, Some(observed), &cfg, seed)?;
    let simulated: Vec<Vec<usize>> = out.graphs.iter().map(degree_counts).collect();
    let obs = degree_counts(observed);
    let top = simulated.iter().map(Vec::len).chain([obs.len()]).max().unwrap_or(0);
    let mut column = vec![0.0; simulated.len()];
    Ok((0..top)
        .map(|d| {
            for (slot, counts) in column.iter_mut().zip(&simulated) {
                *slot = counts.get(d).copied().unwrap_or(0) as f64;
            }
            column.sort_by(f64::total_cmp);
            DegreeEnvelope {
                degree: d,
                observed: obs.get(d).copied().unwrap_or(0),
                min: column[0],
                q1: quantile_sorted(&column, 0.25),
                median: quantile_sorted(&column, 0.5),
                q3: quantile_sorted(&column, 0.75),
                max: column[column.len() - 1],
            }
        })
        .collect())
}
