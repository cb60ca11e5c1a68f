//! Pipeline stages. Each stage reads its inputs (the configured input files
//! and the artefacts of earlier stages in the output directory), writes its
//! documented outputs there, and returns a summary.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use coappear_core::build::{build_coappearance_graph, filter_artifact_clusters, CoAppearanceGraph};
use coappear_core::cluster::{
    build_ground_truth, chinese_whispers, evaluate_clustering, tune_cutoff, ClusterEvaluation, SimilarityGraph,
};
use coappear_core::ergm::{
    ergm_gof, fit_ergm, ErgmFit, ErgmModel, FitConfig, FitMethod, MissingPolicy, NodeAttributes, Term,
};
use coappear_core::graph::Graph;
use coappear_core::inference::{ols_fit, stars, welch_t_test, OlsFit};
use coappear_core::metrics::{centrality_report, topology_report, EigenOptions, Weighting};
use coappear_core::model::{FaceRecord, Gender, Tier, WatchlistEntry};
use coappear_core::robustness::{opportunistic_topk_removal, remove_random_nodes, RemovalTrialResult};
use coappear_core::synth::{generate, SynthConfig};
use coappear_core::watchlist::{
    apply_matches, combine_matches, match_by_face, match_by_name, tier_summary, MatchResult, TierSummary,
};
use serde::{Deserialize, Serialize};

use crate::config::{ErgmGraph, ErgmModelSpec, PipelineConfig};
use crate::error::{CliError, Result};
use crate::graph_io::{export_graph, import_graph};
use crate::io::{self, ImageTable, Provenance};

pub const CLUSTERS_FILE: &str = "clusters.jsonl";
pub const CLUSTER_SUMMARY_FILE: &str = "cluster_summary.json";
pub const TUNING_FILE: &str = "tuning.csv";
pub const GRAPH_STEM: &str = "graph";
pub const GRAPH_SUMMARY_FILE: &str = "graph_summary.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TOPOLOGY_FILE: &str = "topology.json";
pub const ROBUSTNESS_FILE: &str = "robustness.csv";
pub const MATCHES_FILE: &str = "matches.jsonl";
pub const TIER_SUMMARY_FILE: &str = "tier_summary.json";
pub const REGRESSION_FILE: &str = "regression.json";
pub const ERGM_REPORT_FILE: &str = "ergm_report.json";
pub const GOF_FILE: &str = "gof.csv";
pub const REPORT_FILE: &str = "report.json";
pub const TRUTH_FILE: &str = "truth.jsonl";
pub const NAMES_FILE: &str = "names.jsonl";

/// Resolved configuration plus the output directory.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: PipelineConfig,
    pub out: PathBuf,
    pub provenance: Provenance,
}

impl Context {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        let out = config.output_dir();
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        let provenance = config.provenance();
        Ok(Self { config, out, provenance })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn graph_path(&self) -> PathBuf {
        self.path(&format!("{GRAPH_STEM}.{}", self.config.graph.format.extension()))
    }
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

fn load_faces(ctx: &Context) -> Result<Vec<FaceRecord>> {
    require(&ctx.config.paths.faces)?;
    io::load_face_records(&ctx.config.paths.faces)
}

fn load_images(ctx: &Context) -> Result<ImageTable> {
    require(&ctx.config.paths.images)?;
    io::load_image_metadata(&ctx.config.paths.images)
}

fn load_watchlist(ctx: &Context) -> Result<Vec<WatchlistEntry>> {
    require(&ctx.config.paths.watchlist)?;
    io::load_watchlist(&ctx.config.paths.watchlist, &ctx.config.tiers.table()?)
}

fn load_stage_output(ctx: &Context, name: &str) -> Result<PathBuf> {
    let p = ctx.path(name);
    require(&p)?;
    Ok(p)
}

fn load_graph(ctx: &Context) -> Result<CoAppearanceGraph> {
    let p = ctx.graph_path();
    require(&p)?;
    import_graph(&p)
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, Serialize)]
pub struct SynthSummary {
    pub faces: usize,
    pub images: usize,
    pub identities: usize,
    pub watchlist_entries: usize,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct TruthRow<'a> {
    face_id: &'a str,
    identity: usize,
    label: &'a str,
}

/// Writes a planted-partition corpus (`faces.jsonl`, `images.jsonl`,
/// `watchlist.jsonl`, `truth.jsonl`) into the output directory.
pub fn synth(ctx: &Context, synth: &SynthConfig) -> Result<SynthSummary> {
    let corpus = generate(synth)?;
    let files =
        vec![ctx.path("faces.jsonl"), ctx.path("images.jsonl"), ctx.path("watchlist.jsonl"), ctx.path(TRUTH_FILE)];
    io::write_face_records(&files[0], &ctx.provenance, &corpus.faces)?;
    io::write_image_metadata(&files[1], &ctx.provenance, &corpus.images)?;
    io::write_watchlist(&files[2], &ctx.provenance, &corpus.watchlist)?;
    let truth: Vec<TruthRow> = corpus
        .faces
        .iter()
        .map(|f| {
            let identity = corpus.identity_of[&f.face_id];
            TruthRow { face_id: &f.face_id, identity, label: &corpus.labels[identity] }
        })
        .collect();
    io::write_jsonl(&files[3], &ctx.provenance, &truth)?;
    Ok(SynthSummary {
        faces: corpus.faces.len(),
        images: corpus.images.len(),
        identities: synth.identities,
        watchlist_entries: corpus.watchlist.len(),
        files,
    })
}

// ---------------------------------------------------------------- cluster

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationDoc {
    pub rand_index: f64,
    pub adjusted_mutual_info: f64,
    pub fraction_clustered: f64,
}

impl From<ClusterEvaluation> for EvaluationDoc {
    fn from(e: ClusterEvaluation) -> Self {
        Self {
            rand_index: e.rand_index,
            adjusted_mutual_info: e.adjusted_mutual_info,
            fraction_clustered: e.fraction_clustered,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub provenance: Provenance,
    pub cutoff: f64,
    pub faces: usize,
    pub clusters: usize,
    pub unclustered: usize,
    pub fraction_clustered: f64,
    pub similarity_edges: usize,
    /// Against labelled single-face images, when there are any.
    pub evaluation: Option<EvaluationDoc>,
}

pub fn cluster(ctx: &Context) -> Result<ClusterSummary> {
    let faces = load_faces(ctx)?;
    if faces.is_empty() {
        return Err(CliError::EmptyCorpus);
    }
    let cutoff = ctx.config.cluster.cutoff;
    let sim = SimilarityGraph::build(&faces, cutoff)?;
    let assignment = chinese_whispers(&sim, ctx.config.cluster.max_iterations, ctx.config.seed)?;
    io::write_clusters(&ctx.path(CLUSTERS_FILE), &ctx.provenance, &assignment)?;
    let evaluation = match ctx.config.paths.images.exists() {
        true => {
            let images = load_images(ctx)?;
            let truth = build_ground_truth(&faces, &images.by_id())?;
            evaluate_clustering(&assignment, &truth).ok().map(EvaluationDoc::from)
        }
        false => None,
    };
    let summary = ClusterSummary {
        provenance: ctx.provenance.clone(),
        cutoff,
        faces: faces.len(),
        clusters: assignment.cluster_count(),
        unclustered: assignment.unclustered_count(),
        fraction_clustered: assignment.fraction_clustered(),
        similarity_edges: sim.edge_count(),
        evaluation,
    };
    io::write_json(&ctx.path(CLUSTER_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- tune

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningRow {
    pub cutoff: f64,
    pub rand: f64,
    pub ami: f64,
    pub fraction_clustered: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneSummary {
    pub best_cutoff: f64,
    pub best: TuningRow,
    pub grid_points: usize,
}

pub fn tune(ctx: &Context) -> Result<TuneSummary> {
    let faces = load_faces(ctx)?;
    if faces.is_empty() {
        return Err(CliError::EmptyCorpus);
    }
    let images = load_images(ctx)?;
    let truth = build_ground_truth(&faces, &images.by_id())?;
    let grid = ctx.config.cluster.grid()?;
    let result = tune_cutoff(&faces, &truth, &grid, ctx.config.cluster.max_iterations, ctx.config.seed)?;
    let rows: Vec<TuningRow> = result
        .points
        .iter()
        .map(|p| TuningRow {
            cutoff: p.cutoff,
            rand: p.evaluation.rand_index,
            ami: p.evaluation.adjusted_mutual_info,
            fraction_clustered: p.evaluation.fraction_clustered,
        })
        .collect();
    io::write_csv(&ctx.path(TUNING_FILE), &ctx.provenance, &rows)?;
    let best = rows.iter().find(|r| r.cutoff == result.best_cutoff).cloned().expect("best is on the grid");
    Ok(TuneSummary { best_cutoff: result.best_cutoff, best, grid_points: rows.len() })
}

// ---------------------------------------------------------------- build-graph

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSummary {
    pub provenance: Provenance,
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: u64,
    pub isolates: usize,
    pub unmatched_metadata: usize,
    pub unclustered_faces: usize,
    pub timestamp_warnings: usize,
    pub denylisted_clusters: usize,
    pub files: Vec<String>,
}

pub fn build_graph(ctx: &Context) -> Result<GraphSummary> {
    let faces = load_faces(ctx)?;
    let images = load_images(ctx)?;
    let assignment = io::load_clusters(&load_stage_output(ctx, CLUSTERS_FILE)?)?;
    let denylist: BTreeSet<usize> = ctx.config.cluster.denylist.iter().copied().collect();
    let assignment = if denylist.is_empty() { assignment } else { filter_artifact_clusters(&assignment, &denylist)? };
    let (graph, stats) = build_coappearance_graph(&assignment, &faces, &images.by_id())?;
    let files = export_graph(&graph, ctx.config.graph.format, &ctx.graph_path(), &ctx.provenance)?
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let skeleton = graph.skeleton();
    let summary = GraphSummary {
        provenance: ctx.provenance.clone(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        total_weight: graph.total_weight(),
        isolates: (0..skeleton.node_count()).filter(|&u| skeleton.degree(u) == 0).count(),
        unmatched_metadata: stats.unmatched_metadata,
        unclustered_faces: stats.unclustered_faces,
        timestamp_warnings: images.timestamp_warnings,
        denylisted_clusters: denylist.len(),
        files,
    };
    io::write_json(&ctx.path(GRAPH_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- metrics

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub node_id: usize,
    pub image_count: usize,
    pub degree: f64,
    pub eigenvector: f64,
    pub betweenness: f64,
    pub standardized_degree: f64,
    pub standardized_eigenvector: f64,
    pub standardized_betweenness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawDoc {
    pub alpha: f64,
    pub k_min: usize,
    pub n_tail: usize,
    pub approx_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallWorldDoc {
    pub s: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub clustering: f64,
    pub path_length: f64,
    pub reference_clustering: f64,
    pub reference_path_length: f64,
    pub references: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDoc {
    pub provenance: Provenance,
    pub node_count: usize,
    pub edge_count: usize,
    pub lcc_node_count: usize,
    pub lcc_edge_count: usize,
    pub power_law: Option<PowerLawDoc>,
    pub mean_clustering: f64,
    pub avg_shortest_path: f64,
    pub small_world: Option<SmallWorldDoc>,
}

fn eigen_options(ctx: &Context) -> EigenOptions {
    let weighting = if ctx.config.metrics.weighted { Weighting::Weighted } else { Weighting::Unweighted };
    EigenOptions { weighting, ..EigenOptions::default() }
}

pub fn metrics(ctx: &Context) -> Result<TopologyDoc> {
    let graph = load_graph(ctx)?;
    let report = centrality_report(&graph, eigen_options(ctx))?;
    let rows = graph.nodes().iter().enumerate().map(|(p, n)| MetricsRow {
        node_id: n.cluster_id,
        image_count: n.image_count(),
        degree: report.degree[p],
        eigenvector: report.eigenvector[p],
        betweenness: report.betweenness[p],
        standardized_degree: report.standardized_degree[p],
        standardized_eigenvector: report.standardized_eigenvector[p],
        standardized_betweenness: report.standardized_betweenness[p],
    });
    io::write_csv(&ctx.path(METRICS_FILE), &ctx.provenance, rows)?;
    let m = &ctx.config.metrics;
    let t = topology_report(&graph, m.k_min, m.reference_graphs, ctx.config.seed)?;
    let doc = TopologyDoc {
        provenance: ctx.provenance.clone(),
        node_count: t.node_count,
        edge_count: t.edge_count,
        lcc_node_count: t.lcc_node_count,
        lcc_edge_count: t.lcc_edge_count,
        power_law: t.power_law.map(|p| PowerLawDoc {
            alpha: p.alpha,
            k_min: p.k_min,
            n_tail: p.n_tail,
            approx_alpha: p.approx_alpha,
        }),
        mean_clustering: t.mean_clustering,
        avg_shortest_path: t.avg_shortest_path,
        small_world: t.small_world.map(|s| SmallWorldDoc {
            s: s.s,
            gamma: s.gamma,
            lambda: s.lambda,
            clustering: s.clustering,
            path_length: s.path_length,
            reference_clustering: s.reference_clustering,
            reference_path_length: s.reference_path_length,
            references: s.references_used,
        }),
    };
    io::write_json(&ctx.path(TOPOLOGY_FILE), &doc)?;
    Ok(doc)
}

// ---------------------------------------------------------------- robustness

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub strategy: String,
    pub k: Option<usize>,
    pub removed: usize,
    pub trial: usize,
    pub relative_lcc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub strategy: String,
    pub k: Option<usize>,
    pub removed: usize,
    pub mean_relative_lcc: f64,
}

pub fn robustness(ctx: &Context) -> Result<Vec<RobustnessPoint>> {
    let graph = load_graph(ctx)?;
    let g = graph.skeleton();
    let r = &ctx.config.robustness;
    let k = r.pool_size.min(g.node_count());
    let max_removed = r.max_removed.unwrap_or(k).min(k);
    let mut results: Vec<RemovalTrialResult> = Vec::new();
    for removed in 0..=max_removed {
        results.push(remove_random_nodes(&g, removed, r.trials, ctx.config.seed)?);
    }
    for removed in 0..=max_removed {
        results.push(opportunistic_topk_removal(&g, k, removed, r.trials, r.centrality.into(), ctx.config.seed)?);
    }
    let rows = results.iter().flat_map(|res| {
        res.samples.iter().enumerate().map(move |(trial, &v)| RobustnessRow {
            strategy: res.strategy.to_string(),
            k: res.k,
            removed: res.removed,
            trial,
            relative_lcc: v,
        })
    });
    io::write_csv(&ctx.path(ROBUSTNESS_FILE), &ctx.provenance, rows)?;
    Ok(results
        .iter()
        .map(|res| RobustnessPoint {
            strategy: res.strategy.to_string(),
            k: res.k,
            removed: res.removed,
            mean_relative_lcc: res.mean(),
        })
        .collect())
}

// ---------------------------------------------------------------- match

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierRow {
    pub tier: String,
    pub reward: f64,
    pub listed: usize,
    pub matched: usize,
    pub percent_matched: f64,
    pub mean_image_count: Option<f64>,
    pub percent_isolates: Option<f64>,
    pub mean_degree: Option<f64>,
    pub mean_eigenvector: Option<f64>,
    pub mean_betweenness: Option<f64>,
    pub mean_standardized_degree: Option<f64>,
    pub mean_standardized_eigenvector: Option<f64>,
    pub mean_standardized_betweenness: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchSummary {
    pub provenance: Provenance,
    pub face_matches: usize,
    pub name_matches: usize,
    pub combined: usize,
    /// Whether the tier table uses a reviewed matches file.
    pub reviewed: bool,
    pub tiers: Vec<TierRow>,
}

fn tier_rows(summary: &[TierSummary], ctx: &Context) -> Result<Vec<TierRow>> {
    let table = ctx.config.tiers.table()?;
    Ok(summary
        .iter()
        .map(|s| TierRow {
            tier: s.tier.as_str().to_string(),
            reward: table.reward(s.tier),
            listed: s.listed,
            matched: s.matched,
            percent_matched: s.percent_matched,
            mean_image_count: s.mean_image_count,
            percent_isolates: s.percent_isolates,
            mean_degree: s.mean_degree,
            mean_eigenvector: s.mean_eigenvector,
            mean_betweenness: s.mean_betweenness,
            mean_standardized_degree: s.mean_standardized_degree,
            mean_standardized_eigenvector: s.mean_standardized_eigenvector,
            mean_standardized_betweenness: s.mean_standardized_betweenness,
        })
        .collect())
}

/// Matches used by downstream analyses: the reviewed file when configured,
/// otherwise every automated match.
pub fn analysis_matches(ctx: &Context) -> Result<(Vec<MatchResult>, bool)> {
    match &ctx.config.paths.reviewed_matches {
        Some(p) => {
            require(p)?;
            Ok((io::load_matches(p)?, true))
        }
        None => Ok((io::load_matches(&load_stage_output(ctx, MATCHES_FILE)?)?, false)),
    }
}

pub fn match_watchlist(ctx: &Context) -> Result<MatchSummary> {
    let faces = load_faces(ctx)?;
    let assignment = io::load_clusters(&load_stage_output(ctx, CLUSTERS_FILE)?)?;
    let entries = load_watchlist(ctx)?;
    let index = assignment.index();
    let members: Vec<(usize, &coappear_core::model::Embedding)> = faces
        .iter()
        .filter_map(|f| index.get(f.face_id.as_str()).copied().flatten().map(|c| (c, &f.embedding)))
        .collect();
    let face = if entries.iter().any(|e| e.embedding.is_some()) {
        match_by_face(members.iter().copied(), &entries, ctx.config.watchlist.cutoff)?
    } else {
        Vec::new()
    };
    let name = match &ctx.config.paths.names {
        Some(p) => {
            require(p)?;
            match_by_name(&io::load_names(p)?, &entries)
        }
        None => Vec::new(),
    };
    let combined = combine_matches(&face, &name);
    io::write_matches(&ctx.path(MATCHES_FILE), &ctx.provenance, &combined)?;
    let (used, reviewed) = analysis_matches(ctx)?;
    let tiers = if ctx.graph_path().exists() {
        let graph = load_graph(ctx)?;
        let report = centrality_report(&graph, eigen_options(ctx))?;
        tier_rows(&tier_summary(&used, &entries, &graph, &report)?, ctx)?
    } else {
        Vec::new()
    };
    let summary = MatchSummary {
        provenance: ctx.provenance.clone(),
        face_matches: face.len(),
        name_matches: name.len(),
        combined: combined.len(),
        reviewed,
        tiers,
    };
    io::write_json(&ctx.path(TIER_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- regress

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDoc {
    pub estimate: f64,
    pub standard_error: f64,
    pub t_value: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsDoc {
    pub name: String,
    pub regressor: String,
    pub intercept: CoefficientDoc,
    pub slope: CoefficientDoc,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub n: usize,
}

fn ols_doc(name: &str, regressor: &str, fit: &OlsFit) -> OlsDoc {
    let coef = |k: usize| CoefficientDoc {
        estimate: fit.coefficients[k],
        standard_error: fit.standard_errors[k],
        t_value: fit.t_values[k],
        p_value: fit.p_values[k],
        stars: stars(fit.p_values[k]).to_string(),
    };
    OlsDoc {
        name: name.into(),
        regressor: regressor.into(),
        intercept: coef(0),
        slope: coef(1),
        r_squared: fit.r_squared,
        adj_r_squared: fit.adj_r_squared,
        n: fit.n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchDoc {
    pub mean_female: f64,
    pub mean_male: f64,
    pub n_female: usize,
    pub n_male: usize,
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDoc {
    pub provenance: Provenance,
    pub exclude_red: bool,
    pub reviewed_matches: bool,
    pub models: Vec<Section<OlsDoc>>,
    /// Image counts of female vs male nodes.
    pub gender_image_counts: Option<WelchDoc>,
}

/// One observation per matched entry whose cluster is in the graph.
fn observations<'a>(
    graph: &CoAppearanceGraph,
    matches: &[MatchResult],
    entries: &'a [WatchlistEntry],
    exclude_red: bool,
) -> Vec<(&'a WatchlistEntry, usize)> {
    let by_id: BTreeMap<&str, &WatchlistEntry> = entries.iter().map(|e| (e.entry_id.as_str(), e)).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in matches {
        let (Some(entry), Some(pos)) = (by_id.get(m.entry_id.as_str()), graph.position_of(m.cluster_id)) else {
            continue;
        };
        if (exclude_red && entry.tier == Tier::Red) || !seen.insert(m.entry_id.as_str()) {
            continue;
        }
        out.push((*entry, pos));
    }
    out
}

pub fn regress(ctx: &Context, exclude_red: bool) -> Result<RegressionDoc> {
    let graph = load_graph(ctx)?;
    let entries = load_watchlist(ctx)?;
    let (matches, reviewed) = analysis_matches(ctx)?;
    let report = centrality_report(&graph, eigen_options(ctx))?;
    let obs = observations(&graph, &matches, &entries, exclude_red);
    let y: Vec<f64> = obs.iter().map(|(e, _)| e.reward).collect();
    let column = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { obs.iter().map(|&(_, p)| f(p)).collect() };
    let specs: [(&str, &str, Vec<f64>); 4] = [
        ("model_1", "image_count", column(&|p| graph.nodes()[p].image_count() as f64)),
        ("model_2", "degree_per_image", column(&|p| report.standardized_degree[p])),
        ("model_3", "eigenvector_per_image", column(&|p| report.standardized_eigenvector[p])),
        ("model_4", "betweenness_per_image", column(&|p| report.standardized_betweenness[p])),
    ];
    let models: Vec<Section<OlsDoc>> = specs
        .iter()
        .map(|(name, regressor, x)| {
            section(name, ols_fit(&y, x).map(|f| ols_doc(name, regressor, &f)).map_err(CliError::from))
        })
        .collect();
    if models.iter().all(|m| matches!(m, Section::Failed { .. })) {
        return Err(coappear_core::Error::InvalidParameter("no regression model could be fitted".into()).into());
    }
    let doc = RegressionDoc {
        provenance: ctx.provenance.clone(),
        exclude_red,
        reviewed_matches: reviewed,
        models,
        gender_image_counts: gender_test(&graph),
    };
    let file = if exclude_red { "regression_exclude_red.json" } else { REGRESSION_FILE };
    io::write_json(&ctx.path(file), &doc)?;
    Ok(doc)
}

fn gender_test(graph: &CoAppearanceGraph) -> Option<WelchDoc> {
    let counts = |g: Gender| -> Vec<f64> {
        graph
            .nodes()
            .iter()
            .filter(|n| n.gender_estimate.is_some_and(|e| e.label == g))
            .map(|n| n.image_count() as f64)
            .collect()
    };
    let (f, m) = (counts(Gender::Female), counts(Gender::Male));
    let w = welch_t_test(&f, &m).ok()?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Some(WelchDoc {
        mean_female: mean(&f),
        mean_male: mean(&m),
        n_female: f.len(),
        n_male: m.len(),
        t: w.t,
        p: w.p,
        df: w.df,
    })
}

// ---------------------------------------------------------------- ergm

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub term: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgmModelDoc {
    pub name: String,
    pub graph: ErgmGraph,
    pub nodes: usize,
    pub edges: usize,
    pub terms: Vec<TermDoc>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub method: String,
    pub converged: bool,
    pub rounds: usize,
    pub acceptance_rate: Option<f64>,
    pub effective_sample_size: Option<f64>,
    /// Share of degree values whose observed count lies inside the
    /// simulated min-max envelope.
    pub gof_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub name: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgmReport {
    pub provenance: Provenance,
    pub reviewed_matches: bool,
    pub models: Vec<ErgmModelDoc>,
    pub failures: Vec<StageFailure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GofRow {
    pub model: String,
    pub degree: usize,
    pub observed: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Parses `edges`, `isolates`, `gwesp[:decay]`, `nodecov:<attr>`,
/// `nodefactor:<attr>:<base>`.
pub fn parse_term(spec: &str, default_decay: f64) -> Result<Term> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Config(format!("unknown ERGM term `{spec}`"));
    match parts.as_slice() {
        ["edges"] => Ok(Term::Edges),
        ["isolates"] => Ok(Term::Isolates),
        ["gwesp"] => Ok(Term::Gwesp { decay: default_decay }),
        ["gwesp", d] => Ok(Term::Gwesp { decay: d.parse().map_err(|_| bad())? }),
        ["nodecov", a] => Ok(Term::node_covariate(a)),
        ["nodefactor", a, base] => Ok(Term::node_factor(a, base)),
        _ => Err(bad()),
    }
}

/// Node attributes offered to ERGM terms: `age`, `gender` (female = 1),
/// `reward` (millions), `unmatched` (1 without a watchlist match) and the
/// categorical `wanted` (tier name).
pub fn node_attributes(graph: &CoAppearanceGraph) -> NodeAttributes {
    let nodes = graph.nodes();
    NodeAttributes::new()
        .with_numeric("age", nodes.iter().map(|n| n.age_estimate).collect())
        .with_numeric(
            "gender",
            nodes.iter().map(|n| n.gender_estimate.map(|g| f64::from(u8::from(g.label == Gender::Female)))).collect(),
        )
        .with_numeric("reward", nodes.iter().map(|n| n.reward.map(|r| r / 1000.0)).collect())
        .with_numeric("unmatched", nodes.iter().map(|n| Some(f64::from(u8::from(n.reward.is_none())))).collect())
        .with_categorical("wanted", nodes.iter().map(|n| n.tier.map(|t| t.as_str().to_string())).collect())
}

fn fit_model(
    ctx: &Context,
    full: &CoAppearanceGraph,
    spec: &ErgmModelSpec,
    index: usize,
) -> Result<(ErgmModelDoc, Vec<GofRow>)> {
    let s = &ctx.config.ergm;
    let graph = match spec.graph {
        ErgmGraph::Full => full.clone(),
        ErgmGraph::Connected => {
            let g = full.skeleton();
            let keep: Vec<usize> = (0..g.node_count()).filter(|&u| g.degree(u) > 0).collect();
            full.subgraph(&keep)
        }
    };
    let skeleton: Graph = graph.skeleton();
    let terms = spec.terms.iter().map(|t| parse_term(t, s.decay)).collect::<Result<Vec<_>>>()?;
    let model = ErgmModel::new(&terms, graph.node_count(), &node_attributes(&graph), MissingPolicy::Impute)?;
    let seed = ctx.config.seed.wrapping_add(index as u64);
    let fit_cfg = FitConfig {
        sampler: s.sampler(),
        max_rounds: s.max_rounds,
        tolerance: s.tolerance,
        bridge_steps: s.bridge_steps,
        seed,
        ..FitConfig::default()
    };
    let fit: ErgmFit = fit_ergm(&skeleton, &model, &fit_cfg)?;
    let (gof_rows, coverage) = if s.gof_simulations > 0 {
        let env = ergm_gof(&fit, &model, &skeleton, s.gof_simulations, &s.sampler(), seed ^ 0x60F)?;
        let inside = env.iter().filter(|e| e.contains_observed()).count();
        let rows = env
            .iter()
            .map(|e| GofRow {
                model: spec.name.clone(),
                degree: e.degree,
                observed: e.observed,
                min: e.min,
                q1: e.q1,
                median: e.median,
                q3: e.q3,
                max: e.max,
            })
            .collect();
        (rows, Some(inside as f64 / env.len().max(1) as f64))
    } else {
        (Vec::new(), None)
    };
    let doc = ErgmModelDoc {
        name: spec.name.clone(),
        graph: spec.graph,
        nodes: skeleton.node_count(),
        edges: skeleton.edge_count(),
        terms: fit
            .labels
            .iter()
            .enumerate()
            .map(|(k, l)| TermDoc {
                term: l.clone(),
                estimate: fit.theta[k],
                standard_error: fit.standard_errors[k],
                p_value: fit.p_values[k],
                stars: stars(fit.p_values[k]).to_string(),
            })
            .collect(),
        log_likelihood: fit.log_likelihood,
        aic: fit.aic,
        bic: fit.bic,
        method: match fit.method {
            FitMethod::Exact => "exact".into(),
            FitMethod::Mcmc => "mcmc".into(),
        },
        converged: fit.converged,
        rounds: fit.rounds,
        acceptance_rate: fit.acceptance_rate,
        effective_sample_size: fit.effective_sample_size,
        gof_coverage: coverage,
    };
    Ok((doc, gof_rows))
}

/// Fits every configured model. Failed models are listed in the report;
/// the call fails afterwards if any model failed and `strict` is set.
pub fn ergm(ctx: &Context, strict: bool) -> Result<ErgmReport> {
    let mut graph = load_graph(ctx)?;
    let entries = load_watchlist(ctx)?;
    let (matches, reviewed) = analysis_matches(ctx)?;
    apply_matches(&mut graph, &matches, &entries)?;
    let mut report = ErgmReport {
        provenance: ctx.provenance.clone(),
        reviewed_matches: reviewed,
        models: Vec::new(),
        failures: Vec::new(),
    };
    let mut gof = Vec::new();
    let mut first_error = None;
    for (i, spec) in ctx.config.ergm.models.iter().enumerate() {
        match fit_model(ctx, &graph, spec, i) {
            Ok((doc, rows)) => {
                report.models.push(doc);
                gof.extend(rows);
            }
            Err(e) => {
                report.failures.push(StageFailure {
                    name: spec.name.clone(),
                    kind: e.kind().into(),
                    message: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    io::write_json(&ctx.path(ERGM_REPORT_FILE), &report)?;
    io::write_csv(&ctx.path(GOF_FILE), &ctx.provenance, &gof)?;
    match first_error {
        Some(e) if strict => Err(e),
        _ => Ok(report),
    }
}

// ---------------------------------------------------------------- report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Section<T> {
    Ok(T),
    Failed { error: StageFailure },
}

fn section<T>(name: &str, r: Result<T>) -> Section<T> {
    match r {
        Ok(v) => Section::Ok(v),
        Err(e) => {
            Section::Failed { error: StageFailure { name: name.into(), kind: e.kind().into(), message: e.to_string() } }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    pub clustering: ClusterSummary,
    pub graph: GraphSummary,
    pub topology: Section<TopologyDoc>,
    pub tiers: Section<MatchSummary>,
    pub regression: Section<RegressionDoc>,
    pub regression_exclude_red: Section<RegressionDoc>,
    pub ergm: Option<Section<ErgmReport>>,
}

/// Runs every stage and bundles the headline numbers into `report.json`.
/// Stages after graph construction that fail are recorded in the report.
pub fn report(ctx: &Context, with_ergm: bool) -> Result<Report> {
    let faces = load_faces(ctx)?;
    if faces.is_empty() {
        return Err(CliError::EmptyCorpus);
    }
    drop(faces);
    let clustering = cluster(ctx)?;
    let graph = build_graph(ctx)?;
    let topology = section("topology", metrics(ctx));
    let has_watchlist = ctx.config.paths.watchlist.exists();
    let tiers = section(
        "match",
        if has_watchlist {
            match_watchlist(ctx)
        } else {
            Err(CliError::MissingInput(ctx.config.paths.watchlist.clone()))
        },
    );
    let regression = section("regress", regress(ctx, false));
    let regression_exclude_red = section("regress_exclude_red", regress(ctx, true));
    let ergm = with_ergm.then(|| section("ergm", ergm(ctx, false)));
    let report = Report {
        provenance: ctx.provenance.clone(),
        clustering,
        graph,
        topology,
        tiers,
        regression,
        regression_exclude_red,
        ergm,
    };
    io::write_json(&ctx.path(REPORT_FILE), &report)?;
    Ok(report)
}
