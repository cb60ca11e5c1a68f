//! Exponential-family random graph models.
//!
//! A model assigns a graph `y` probability proportional to
//! `exp(theta . g(y))`, where `g` stacks the statistics of its [`Term`]s.
//! This module provides the statistics and their single-dyad change
//! statistics, a Metropolis-Hastings sampler, maximum-likelihood fitting
//! (exact for dyad-independent models, MCMC-based otherwise), and a
//! degree-distribution goodness-of-fit check.

mod fit;
mod gof;
mod sampler;
mod terms;

pub use fit::{fit_ergm, ErgmFit, FitConfig, FitMethod};
pub use gof::{ergm_gof, DegreeEnvelope};
pub use sampler::{mcmc_sample, SampleOutput, SamplerConfig};
pub use terms::{
    change_statistics, network_statistics, ErgmModel, MissingPolicy, NodeAttributes, Term, DEFAULT_GWESP_DECAY,
    UNMATCHED_LEVEL,
};

use crate::math::exp;

/// `(x_high - x_low) * e^theta`: the tie-odds multiplier arithmetic used to
/// read a node-covariate coefficient as "times more likely".
pub fn tie_odds_multiplier(theta: f64, x_high: f64, x_low: f64) -> f64 {
    (x_high - x_low) * exp(theta)
}
