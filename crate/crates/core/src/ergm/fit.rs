use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::sampler::{effective_sample_size, mcmc_sample, SampleOutput, SamplerConfig};
use super::terms::ErgmModel;
use crate::graph::Graph;
use crate::math::{
    abs, cholesky_solve, exp, ln, log_sum_exp, logistic, logit, normal_two_sided_p, softplus, spd_inverse, sqrt,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Chain settings for each Newton round.
    pub sampler: SamplerConfig,
    pub max_rounds: usize,
    /// Convergence threshold on the largest absolute change in theta.
    pub tolerance: f64,
    /// Use MCMC-MLE even when the model is dyad-independent.
    pub force_mcmc: bool,
    /// Number of bridge steps for the log-likelihood.
    pub bridge_steps: usize,
    /// Chain settings at each bridge anchor.
    pub bridge_sampler: SamplerConfig,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerConfig::default(),
            max_rounds: 20,
            tolerance: 1e-3,
            force_mcmc: false,
            bridge_steps: 16,
            bridge_sampler: SamplerConfig { burn_in: 20_000, interval: 500, samples: 500, keep_graphs: false },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    /// Exact logistic likelihood over dyads.
    Exact,
    /// Monte Carlo maximum likelihood.
    Mcmc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgmFit {
    pub labels: Vec<String>,
    pub theta: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    pub observed: Vec<f64>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    pub method: FitMethod,
    pub rounds: usize,
    pub dyad_count: usize,
    pub acceptance_rate: Option<f64>,
    /// Smallest per-statistic effective sample size of the final round.
    pub effective_sample_size: Option<f64>,
}

impl ErgmFit {
    fn finish(
        model: &ErgmModel,
        theta: Vec<f64>,
        standard_errors: Vec<f64>,
        observed: Vec<f64>,
        log_likelihood: f64,
        method: FitMethod,
    ) -> Self {
        let p = theta.len() as f64;
        let dyads = model.dyad_count();
        let p_values = theta.iter().zip(&standard_errors).map(|(t, s)| normal_two_sided_p(t / s)).collect();
        Self {
            labels: model.labels().to_vec(),
            theta,
            standard_errors,
            p_values,
            observed,
            log_likelihood,
            aic: 2.0 * p - 2.0 * log_likelihood,
            bic: p * ln(dyads as f64) - 2.0 * log_likelihood,
            converged: true,
            method,
            rounds: 0,
            dyad_count: dyads,
            acceptance_rate: None,
            effective_sample_size: None,
        }
    }
}

/// Maximum-likelihood fit of `model` to `graph`.
pub fn fit_ergm(graph: &Graph, model: &ErgmModel, config: &FitConfig) -> Result<ErgmFit> {
    if graph.node_count() != model.node_count() {
        return Err(Error::LengthMismatch { left: graph.node_count(), right: model.node_count() });
    }
    if graph.node_count() < 2 {
        return Err(Error::InvalidParameter("model needs at least two nodes".into()));
    }
    let observed = model.statistics(graph);
    if model.is_dyad_independent() && !config.force_mcmc {
        let fit = logistic_mle(graph, model, &vec![0.0; model.dimension()], 200)?;
        let se = standard_errors(&fit.information, model.dimension())?;
        return Ok(ErgmFit::finish(model, fit.theta, se, observed, fit.log_likelihood, FitMethod::Exact));
    }
    mcmc_mle(graph, model, observed, config)
}

struct LogisticFit {
    theta: Vec<f64>,
    information: Vec<f64>,
    log_likelihood: f64,
}

// Log-likelihood, score and information of the logistic model on dyad
// change statistics. Exact for dyad-independent models; the pseudo-likelihood
// otherwise.
fn logistic_pass(graph: &Graph, model: &ErgmModel, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let p = theta.len();
    let mut ll = 0.0;
    let mut score = vec![0.0; p];
    let mut info = vec![0.0; p * p];
    let mut delta = vec![0.0; p];
    let n = graph.node_count();
    for i in 0..n {
        for j in i + 1..n {
            model.change_into(graph, i, j, &mut delta);
            let eta: f64 = theta.iter().zip(&delta).map(|(t, d)| t * d).sum();
            let y = graph.has_edge(i, j);
            ll += if y { eta } else { 0.0 } - softplus(eta);
            let mu = logistic(eta);
            let resid = f64::from(u8::from(y)) - mu;
            let w = mu * (1.0 - mu);
            for a in 0..p {
                score[a] += resid * delta[a];
                let wa = w * delta[a];
                for b in 0..=a {
                    info[a * p + b] += wa * delta[b];
                }
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[b * p + a] = info[a * p + b];
        }
    }
    (ll, score, info)
}

fn logistic_mle(graph: &Graph, model: &ErgmModel, start: &[f64], max_iterations: usize) -> Result<LogisticFit> {
    logistic_mle_free(graph, model, start, &vec![true; start.len()], max_iterations)
}

fn standard_errors(information: &[f64], p: usize) -> Result<Vec<f64>> {
    let inv = spd_inverse(information, p).ok_or(Error::SingularDesign)?;
    Ok((0..p).map(|k| sqrt(inv[k * p + k])).collect())
}

fn derived_seed(seed: u64, index: u64) -> u64 {
    seed ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Weighted {
    mean: Vec<f64>,
    cov: Vec<f64>,
    ess: f64,
}

// Importance weights exp(eta . g_s), normalised, with their weighted moments.
fn weighted_moments(samples: &[Vec<f64>], eta: &[f64]) -> Weighted {
    let p = eta.len();
    let logw: Vec<f64> = samples.iter().map(|s| eta.iter().zip(s).map(|(e, g)| e * g).sum()).collect();
    let lse = log_sum_exp(&logw);
    let w: Vec<f64> = logw.iter().map(|l| exp(l - lse)).collect();
    let mut mean = vec![0.0; p];
    for (s, wi) in samples.iter().zip(&w) {
        for k in 0..p {
            mean[k] += wi * s[k];
        }
    }
    let mut cov = vec![0.0; p * p];
    for (s, wi) in samples.iter().zip(&w) {
        for a in 0..p {
            let da = s[a] - mean[a];
            for b in 0..p {
                cov[a * p + b] += wi * da * (s[b] - mean[b]);
            }
        }
    }
    let ess = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    Weighted { mean, cov, ess }
}

// Newton-Raphson on the importance-sampled log-likelihood ratio relative to
// the sampling parameter. Returns the offset from that parameter, and the
// weighted moments there. Steps are halved while the importance weights'
// effective sample size is below a tenth of the sample.
fn importance_newton(samples: &[Vec<f64>], observed: &[f64]) -> Result<(Vec<f64>, Weighted)> {
    let p = observed.len();
    let min_ess = 0.1 * samples.len() as f64;
    let mut eta = vec![0.0; p];
    let mut moments = weighted_moments(samples, &eta);
    for _ in 0..100 {
        let grad: Vec<f64> = observed.iter().zip(&moments.mean).map(|(o, m)| o - m).collect();
        let step =
            cholesky_solve(&moments.cov, &grad).ok_or(Error::DegenerateSample("sampled statistics are collinear"))?;
        let mut scale = 1.0;
        let mut halved = false;
        let (cand, next) = loop {
            let cand: Vec<f64> = eta.iter().zip(&step).map(|(e, s)| e + scale * s).collect();
            let next = weighted_moments(samples, &cand);
            if next.ess >= min_ess || scale < 1e-6 {
                break (cand, next);
            }
            scale *= 0.5;
            halved = true;
        };
        let moved = step.iter().map(|s| abs(scale * s)).fold(0.0, f64::max);
        eta = cand;
        moments = next;
        if halved || moved < 1e-10 {
            break;
        }
    }
    Ok((eta, moments))
}

// The MPLE when it exists. Otherwise the dyad-independent reference fit (or
// logit density on the edges column) refined by stochastic approximation.
fn starting_point(graph: &Graph, model: &ErgmModel, observed: &[f64], config: &FitConfig) -> Result<Vec<f64>> {
    if let Ok(fit) = logistic_mle(graph, model, &vec![0.0; model.dimension()], 100) {
        return Ok(fit.theta);
    }
    let density = graph.edge_count() as f64 / model.dyad_count() as f64;
    let fallback: Vec<f64> = model.labels().iter().map(|l| if l == "edges" { logit(density) } else { 0.0 }).collect();
    let start = independent_reference(graph, model, &fallback);
    stochastic_approximation(graph, model, start, observed, config)
}

const SA_SUBPHASES: i32 = 4;
const SA_INITIAL_GAIN: f64 = 0.1;
const SA_MAX_STEP: f64 = 1.0;

// Robbins-Monro iteration theta <- theta - a D^-1 (g(y) - g_obs) along one
// continuing chain, with D the diagonal of the sampled covariance at the
// start. The gain halves in each subphase and each subphase ends at its
// average iterate.
fn stochastic_approximation(
    graph: &Graph,
    model: &ErgmModel,
    mut theta: Vec<f64>,
    observed: &[f64],
    config: &FitConfig,
) -> Result<Vec<f64>> {
    let p = theta.len();
    let salt = config.seed ^ 0x5A5A_0B5E_4ED1_0000;
    let pilot = SamplerConfig { samples: 7 + 3 * p, keep_graphs: false, ..config.sampler };
    let out = mcmc_sample(model, &theta, Some(graph), &pilot, derived_seed(salt, 0))?;
    let mean = out.mean_statistics();
    let scale: Vec<f64> = (0..p)
        .map(|k| {
            let n = out.statistics.len() as f64;
            let var = out.statistics.iter().map(|s| (s[k] - mean[k]) * (s[k] - mean[k])).sum::<f64>() / n;
            if var > 0.0 {
                var
            } else {
                1.0
            }
        })
        .collect();
    let step_cfg = SamplerConfig { burn_in: config.sampler.interval, interval: 1, samples: 1, keep_graphs: false };
    let mut state = out.final_graph;
    let mut draws = 1u64;
    for sub in 0..SA_SUBPHASES {
        let gain = SA_INITIAL_GAIN / f64::from(1 << sub);
        let len = ((7 + p) as f64 * crate::math::powf(2.0, 4.0 * f64::from(sub + 1) / 3.0)) as usize;
        let mut average = vec![0.0; p];
        for _ in 0..len {
            let out = mcmc_sample(model, &theta, Some(&state), &step_cfg, derived_seed(salt, draws))?;
            draws += 1;
            for k in 0..p {
                let step = gain * (out.statistics[0][k] - observed[k]) / scale[k];
                theta[k] -= step.clamp(-SA_MAX_STEP, SA_MAX_STEP);
                average[k] += theta[k] / len as f64;
            }
            state = out.final_graph;
        }
        theta = average;
    }
    Ok(theta)
}

// A statistic whose sampled variance vanishes leaves its coefficient
// unidentified by the importance step.
fn check_variation(samples: &[Vec<f64>]) -> Result<()> {
    let p = samples.first().map_or(0, Vec::len);
    let n = samples.len() as f64;
    for k in 0..p {
        let mean = samples.iter().map(|s| s[k]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s[k] - mean) * (s[k] - mean)).sum::<f64>() / n;
        if var <= 1e-12 * (1.0 + mean * mean) {
            return Err(Error::DegenerateSample("a model statistic did not vary in the sample"));
        }
    }
    Ok(())
}

fn mcmc_mle(graph: &Graph, model: &ErgmModel, observed: Vec<f64>, config: &FitConfig) -> Result<ErgmFit> {
    let dyads = model.dyad_count();
    let density = graph.edge_count() as f64 / dyads as f64;
    if graph.edge_count() == 0 || graph.edge_count() == dyads {
        return Err(Error::DegenerateSample("observed graph is empty or complete"));
    }
    let p = model.dimension();
    let mut theta = starting_point(graph, model, &observed, config)?;
    let mut last: Option<(SampleOutput, Weighted)> = None;
    let mut converged = false;
    let mut rounds = 0;
    for round in 0..config.max_rounds {
        rounds = round + 1;
        let sample = mcmc_sample(model, &theta, Some(graph), &config.sampler, derived_seed(config.seed, round as u64))?;
        let simulated = sample.mean_density(dyads);
        if !(simulated >= 0.1 * density && simulated <= 10.0 * density) {
            return Err(Error::Degenerate { simulated, observed: density });
        }
        check_variation(&sample.statistics)?;
        let (eta, moments) = importance_newton(&sample.statistics, &observed)?;
        let change = eta.iter().map(|e| abs(*e)).fold(0.0, f64::max);
        let within_noise = hotelling(&sample, &observed).is_some_and(|t2| t2 < p as f64);
        for (t, e) in theta.iter_mut().zip(&eta) {
            *t += e;
        }
        last = Some((sample, moments));
        if change < config.tolerance || within_noise {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations: config.max_rounds });
    }
    let (sample, moments) = last.expect("at least one round ran");
    let se = standard_errors(&moments.cov, p)?;
    let log_likelihood = bridge_log_likelihood(graph, model, &theta, &observed, config)?;
    let mut fit = ErgmFit::finish(model, theta, se, observed, log_likelihood, FitMethod::Mcmc);
    fit.converged = converged;
    fit.rounds = rounds;
    fit.acceptance_rate = Some(sample.acceptance_rate);
    fit.effective_sample_size = Some(min_ess(&sample.statistics));
    Ok(fit)
}

fn min_ess(samples: &[Vec<f64>]) -> f64 {
    let p = samples.first().map_or(0, Vec::len);
    (0..p)
        .map(|k| {
            let xs: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            effective_sample_size(&xs)
        })
        .fold(f64::INFINITY, f64::min)
}

// Hotelling-type distance between the observed statistics and the sample
// mean, with the covariance of the mean inflated for autocorrelation.
fn hotelling(sample: &SampleOutput, observed: &[f64]) -> Option<f64> {
    let p = observed.len();
    let moments = weighted_moments(&sample.statistics, &vec![0.0; p]);
    let ess = min_ess(&sample.statistics).max(1.0);
    let scaled: Vec<f64> = moments.cov.iter().map(|c| c / ess).collect();
    let d: Vec<f64> = moments.mean.iter().zip(observed).map(|(m, o)| m - o).collect();
    let x = cholesky_solve(&scaled, &d)?;
    Some(d.iter().zip(&x).map(|(a, b)| a * b).sum())
}

// log k(theta) of the dyad-independent part of the model, exactly.
fn independent_log_normalizer(graph: &Graph, model: &ErgmModel, theta: &[f64]) -> f64 {
    let n = graph.node_count();
    let mut delta = vec![0.0; theta.len()];
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            model.change_into(graph, i, j, &mut delta);
            let eta: f64 = theta.iter().zip(&delta).map(|(t, d)| t * d).sum();
            total += softplus(eta);
        }
    }
    total
}

// Exact MLE of the dyad-independent columns with the dependent ones held at
// zero. Falls back to `theta` with the dependent coefficients zeroed.
fn independent_reference(graph: &Graph, model: &ErgmModel, theta: &[f64]) -> Vec<f64> {
    let dependent = model.dependent_columns();
    let zeroed: Vec<f64> = theta.iter().zip(&dependent).map(|(t, d)| if *d { 0.0 } else { *t }).collect();
    let free: Vec<bool> = dependent.iter().map(|d| !d).collect();
    logistic_mle_free(graph, model, &zeroed, &free, 100).map_or(zeroed, |fit| fit.theta)
}

// Newton with step halving on the free columns; the others stay at `start`.
// A coefficient beyond 30 at a stationary point means the data are
// separated and the MLE does not exist.
fn logistic_mle_free(
    graph: &Graph,
    model: &ErgmModel,
    start: &[f64],
    free: &[bool],
    max_iterations: usize,
) -> Result<LogisticFit> {
    let p = start.len();
    let idx: Vec<usize> = (0..p).filter(|&k| free[k]).collect();
    let q = idx.len();
    let reduce = |score: &[f64], info: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let s = idx.iter().map(|&a| score[a]).collect();
        let m = idx.iter().flat_map(|&a| idx.iter().map(move |&b| info[a * p + b])).collect();
        (s, m)
    };
    let mut theta = start.to_vec();
    let (mut ll, mut score, mut info) = logistic_pass(graph, model, &theta);
    for _ in 0..max_iterations {
        let (s, m) = reduce(&score, &info);
        let step = cholesky_solve(&m, &s).ok_or(Error::SingularDesign)?;
        let mut scale = 1.0;
        let (cand, next) = loop {
            let mut cand = theta.clone();
            for (k, &a) in idx.iter().enumerate() {
                cand[a] += scale * step[k];
            }
            let next = logistic_pass(graph, model, &cand);
            if next.0 >= ll - 1e-12 * (1.0 + abs(ll)) || scale < 1e-8 {
                break (cand, next);
            }
            scale *= 0.5;
        };
        let moved = step.iter().map(|s| abs(scale * s)).fold(0.0, f64::max);
        theta = cand;
        (ll, score, info) = next;
        if moved < 1e-10 || q == 0 {
            if theta.iter().any(|t| abs(*t) > 30.0) {
                break;
            }
            return Ok(LogisticFit { theta, information: info, log_likelihood: ll });
        }
    }
    Err(Error::NotConverged { iterations: max_iterations })
}

const MAX_BRIDGE_SPLITS: usize = 4;

struct Bridge<'a> {
    graph: &'a Graph,
    model: &'a ErgmModel,
    config: &'a FitConfig,
    anchors_sampled: u64,
}

impl Bridge<'_> {
    fn sample(&mut self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let seed = derived_seed(self.config.seed ^ 0xB41D_6E5A_11CE_0001, self.anchors_sampled);
        self.anchors_sampled += 1;
        Ok(mcmc_sample(self.model, theta, Some(self.graph), &self.config.bridge_sampler, seed)?.statistics)
    }

    // log k(b) - log k(a) by the midpoint identity. A segment whose weights
    // collapse below a tenth of the sample is split in two, at most
    // `MAX_BRIDGE_SPLITS` times.
    fn segment(&mut self, a: &[f64], sa: &[Vec<f64>], b: &[f64], sb: &[Vec<f64>], depth: usize) -> Result<f64> {
        let half: Vec<f64> = b.iter().zip(a).map(|(y, x)| 0.5 * (y - x)).collect();
        let up: Vec<f64> = sa.iter().map(|s| dot(&half, s)).collect();
        let down: Vec<f64> = sb.iter().map(|s| -dot(&half, s)).collect();
        let ess = weight_ess(&up).min(weight_ess(&down)) / up.len().min(down.len()) as f64;
        if ess < 0.1 {
            if depth == MAX_BRIDGE_SPLITS {
                return Err(Error::DegenerateSample("log-likelihood bridge weights collapsed"));
            }
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            let sm = self.sample(&mid)?;
            return Ok(self.segment(a, sa, &mid, &sm, depth + 1)? + self.segment(&mid, &sm, b, sb, depth + 1)?);
        }
        Ok((log_sum_exp(&up) - ln(up.len() as f64)) - (log_sum_exp(&down) - ln(down.len() as f64)))
    }
}

fn weight_ess(logw: &[f64]) -> f64 {
    let lse = log_sum_exp(logw);
    1.0 / logw.iter().map(|l| exp(2.0 * (l - lse))).sum::<f64>()
}

// log-likelihood at theta. The normaliser is bridged from a dyad-independent
// reference whose normaliser is a product over dyads.
fn bridge_log_likelihood(
    graph: &Graph,
    model: &ErgmModel,
    theta: &[f64],
    observed: &[f64],
    config: &FitConfig,
) -> Result<f64> {
    let reference = independent_reference(graph, model, theta);
    let mut log_kappa = independent_log_normalizer(graph, model, &reference);
    if reference != theta {
        let steps = config.bridge_steps.max(1);
        let anchors: Vec<Vec<f64>> = (0..=steps)
            .map(|k| {
                let t = k as f64 / steps as f64;
                reference.iter().zip(theta).map(|(r, h)| r + t * (h - r)).collect()
            })
            .collect();
        let mut bridge = Bridge { graph, model, config, anchors_sampled: 0 };
        let mut samples = Vec::with_capacity(anchors.len());
        for anchor in &anchors {
            samples.push(bridge.sample(anchor)?);
        }
        for k in 0..steps {
            log_kappa += bridge.segment(&anchors[k], &samples[k], &anchors[k + 1], &samples[k + 1], 0)?;
        }
    }
    let ll = dot(theta, observed) - log_kappa;
    if !ll.is_finite() {
        return Err(Error::DegenerateSample("bridge estimate is not finite"));
    }
    Ok(ll)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergm::{MissingPolicy, NodeAttributes, Term};
    use crate::math::pairs;

    fn ring_with_chords(n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            edges.push((i, (i + 1) % n));
            if i % 3 == 0 {
                edges.push((i, (i + 7) % n));
            }
        }
        Graph::from_edges(n, &edges)
    }

    #[test]
    fn edges_only_exact_is_logit_density() {
        let g = ring_with_chords(40);
        let model = ErgmModel::new(&[Term::Edges], 40, &NodeAttributes::new(), MissingPolicy::Reject).unwrap();
        let fit = fit_ergm(&g, &model, &FitConfig::default()).unwrap();
        let d = g.edge_count() as f64 / pairs(40);
        assert!((fit.theta[0] - logit(d)).abs() < 1e-9);
        assert_eq!(fit.method, FitMethod::Exact);
        let m = g.edge_count() as f64;
        let ll = m * ln(d) + (pairs(40) - m) * ln(1.0 - d);
        assert!((fit.log_likelihood - ll).abs() < 1e-6);
        assert_eq!(fit.aic, 2.0 - 2.0 * fit.log_likelihood);
    }

    #[test]
    fn edges_only_mcmc_lands_near_logit() {
        let g = ring_with_chords(40);
        let model = ErgmModel::new(&[Term::Edges], 40, &NodeAttributes::new(), MissingPolicy::Reject).unwrap();
        let cfg = FitConfig {
            force_mcmc: true,
            sampler: SamplerConfig { burn_in: 5_000, interval: 100, samples: 1_000, keep_graphs: false },
            seed: 4,
            ..FitConfig::default()
        };
        let fit = fit_ergm(&g, &model, &cfg).unwrap();
        let d = g.edge_count() as f64 / pairs(40);
        assert!((fit.theta[0] - logit(d)).abs() < 0.02, "{:?}", fit.theta);
        assert_eq!(fit.method, FitMethod::Mcmc);
        assert!(fit.converged);
        let ll = g.edge_count() as f64 * ln(d) + (pairs(40) - g.edge_count() as f64) * ln(1.0 - d);
        assert!((fit.log_likelihood - ll).abs() < 0.1);
    }

    #[test]
    fn empty_graph_is_rejected_for_mcmc() {
        let model =
            ErgmModel::new(&[Term::Edges, Term::Isolates], 10, &NodeAttributes::new(), MissingPolicy::Reject).unwrap();
        assert!(fit_ergm(&Graph::new(10), &model, &FitConfig::default()).is_err());
    }

    fn exact_log_likelihood(g: &Graph, model: &ErgmModel, theta: &[f64]) -> f64 {
        let n = g.node_count();
        let dyads: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let terms: Vec<f64> = (0u32..1 << dyads.len())
            .map(|mask| {
                let edges: Vec<(usize, usize)> =
                    dyads.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &d)| d).collect();
                dot(theta, &model.statistics(&Graph::from_edges(n, &edges)))
            })
            .collect();
        dot(theta, &model.statistics(g)) - log_sum_exp(&terms)
    }

    #[test]
    fn bridged_log_likelihood_matches_enumeration() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5)]);
        let attrs =
            NodeAttributes::new().with_numeric("x", vec![Some(1.0), Some(0.5), None, Some(2.0), Some(0.0), Some(1.5)]);
        let terms = [Term::Edges, Term::Gwesp { decay: 0.5 }, Term::node_covariate("x")];
        let model = ErgmModel::new(&terms, 6, &attrs, MissingPolicy::Impute).unwrap();
        let observed = model.statistics(&g);
        let config = FitConfig {
            bridge_sampler: SamplerConfig { burn_in: 2_000, interval: 20, samples: 4_000, keep_graphs: false },
            ..FitConfig::default()
        };
        for theta in [[-1.0, 0.6, 0.2], [-2.5, 1.5, -0.3]] {
            let exact = exact_log_likelihood(&g, &model, &theta);
            let bridged = bridge_log_likelihood(&g, &model, &theta, &observed, &config).unwrap();
            assert!((exact - bridged).abs() < 0.05, "exact {exact} bridged {bridged}");
        }
    }

    #[test]
    fn planted_isolates_model_is_recovered() {
        let n = 80;
        let model =
            ErgmModel::new(&[Term::Edges, Term::Isolates], n, &NodeAttributes::new(), MissingPolicy::Reject).unwrap();
        let planted = [-3.0, 1.0];
        let cfg = SamplerConfig { burn_in: 200_000, interval: 1, samples: 1, keep_graphs: false };
        let g = mcmc_sample(&model, &planted, None, &cfg, 11).unwrap().final_graph;
        let fit = fit_ergm(&g, &model, &FitConfig { seed: 3, ..FitConfig::default() }).unwrap();
        for (k, p) in planted.iter().enumerate() {
            assert!((fit.theta[k] - p).abs() < 3.0 * fit.standard_errors[k], "{:?}", fit.theta);
        }
    }
}
