//! Pipeline configuration: a TOML file with sections, overridden by flags.
//!
//! The digest of the effective configuration (SHA-256 of its canonical TOML
//! form) and the seed are stamped into every output.

use std::path::{Path, PathBuf};

use coappear_core::ergm::{SamplerConfig, DEFAULT_GWESP_DECAY};
use coappear_core::model::TierTable;
use coappear_core::robustness::PoolCentrality;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::graph_io::GraphFormat;
use crate::io::Provenance;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "COAPPEAR_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub threads: usize,
    pub paths: Paths,
    pub cluster: ClusterSettings,
    pub graph: GraphSettings,
    pub metrics: MetricsSettings,
    pub robustness: RobustnessSettings,
    pub watchlist: WatchlistSettings,
    pub tiers: TierSettings,
    pub ergm: ErgmSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 1,
            paths: Paths::default(),
            cluster: ClusterSettings::default(),
            graph: GraphSettings::default(),
            metrics: MetricsSettings::default(),
            robustness: RobustnessSettings::default(),
            watchlist: WatchlistSettings::default(),
            tiers: TierSettings::default(),
            ergm: ErgmSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub faces: PathBuf,
    pub images: PathBuf,
    pub watchlist: PathBuf,
    /// Operator-supplied names per cluster, for name matching.
    pub names: Option<PathBuf>,
    /// Reviewed matches (rows with `accepted`); used downstream when set.
    pub reviewed_matches: Option<PathBuf>,
    /// Defaults to `$COAPPEAR_OUT`, then `out`.
    pub output: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            faces: "faces.jsonl".into(),
            images: "images.jsonl".into(),
            watchlist: "watchlist.jsonl".into(),
            names: None,
            reviewed_matches: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub cutoff: f64,
    pub max_iterations: usize,
    pub tune_min: f64,
    pub tune_max: f64,
    pub tune_step: f64,
    /// Cluster ids removed before graph construction.
    pub denylist: Vec<usize>,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self { cutoff: 0.39, max_iterations: 100, tune_min: 0.2, tune_max: 0.6, tune_step: 0.01, denylist: Vec::new() }
    }
}

impl ClusterSettings {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.tune_step > 0.0) || !(self.tune_min > 0.0) || self.tune_max < self.tune_min {
            return Err(CliError::Config("tuning grid needs 0 < tune_min <= tune_max and tune_step > 0".into()));
        }
        let steps = ((self.tune_max - self.tune_min) / self.tune_step + 1e-9).floor() as usize;
        Ok((0..=steps).map(|i| self.tune_min + i as f64 * self.tune_step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSettings {
    pub format: GraphFormat,
}

impl Default for GraphSettings {
    fn default() -> Self {
        Self { format: GraphFormat::Graphml }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSettings {
    pub k_min: usize,
    pub reference_graphs: usize,
    pub weighted: bool,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        Self { k_min: 1, reference_graphs: 20, weighted: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityChoice {
    Degree,
    Eigenvector,
    Betweenness,
}

impl From<CentralityChoice> for PoolCentrality {
    fn from(c: CentralityChoice) -> Self {
        match c {
            CentralityChoice::Degree => PoolCentrality::Degree,
            CentralityChoice::Eigenvector => PoolCentrality::Eigenvector,
            CentralityChoice::Betweenness => PoolCentrality::Betweenness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSettings {
    pub centrality: CentralityChoice,
    pub pool_size: usize,
    pub trials: usize,
    /// Largest number of removed nodes; defaults to the pool size.
    pub max_removed: Option<usize>,
}

impl Default for RobustnessSettings {
    fn default() -> Self {
        Self { centrality: CentralityChoice::Betweenness, pool_size: 30, trials: 1000, max_removed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WatchlistSettings {
    pub cutoff: f64,
}

impl Default for WatchlistSettings {
    fn default() -> Self {
        Self { cutoff: 0.39 }
    }
}

/// Reward per tier, thousands of lira.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TierSettings {
    pub red: f64,
    pub blue: f64,
    pub green: f64,
    pub orange: f64,
    pub grey: f64,
}

impl Default for TierSettings {
    fn default() -> Self {
        Self { red: 10000.0, blue: 3000.0, green: 2000.0, orange: 1000.0, grey: 500.0 }
    }
}

impl TierSettings {
    pub fn table(&self) -> Result<TierTable> {
        Ok(TierTable::new(self.red, self.blue, self.green, self.orange, self.grey)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgmGraph {
    /// The whole network.
    Full,
    /// Nodes with at least one tie.
    Connected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgmModelSpec {
    pub name: String,
    pub graph: ErgmGraph,
    /// `edges`, `isolates`, `gwesp[:decay]`, `nodecov:<attr>`,
    /// `nodefactor:<attr>:<base>`.
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErgmSettings {
    pub decay: f64,
    pub burn_in: usize,
    pub interval: usize,
    pub samples: usize,
    pub max_rounds: usize,
    pub tolerance: f64,
    pub bridge_steps: usize,
    pub gof_simulations: usize,
    pub models: Vec<ErgmModelSpec>,
}

fn model(name: &str, graph: ErgmGraph, terms: &[&str]) -> ErgmModelSpec {
    ErgmModelSpec { name: name.into(), graph, terms: terms.iter().map(|t| t.to_string()).collect() }
}

impl Default for ErgmSettings {
    fn default() -> Self {
        let sampler = SamplerConfig::default();
        Self {
            decay: DEFAULT_GWESP_DECAY,
            burn_in: sampler.burn_in,
            interval: sampler.interval,
            samples: sampler.samples,
            max_rounds: 20,
            tolerance: 1e-3,
            bridge_steps: 16,
            gof_simulations: 100,
            models: vec![
                model(
                    "model_1",
                    ErgmGraph::Full,
                    &["edges", "isolates", "nodecov:age", "nodecov:gender", "nodecov:reward"],
                ),
                model(
                    "model_2",
                    ErgmGraph::Full,
                    &["edges", "isolates", "nodecov:age", "nodecov:gender", "nodefactor:wanted:Grey"],
                ),
                model(
                    "model_3",
                    ErgmGraph::Connected,
                    &["edges", "gwesp", "nodecov:age", "nodecov:gender", "nodecov:reward"],
                ),
                model(
                    "model_4",
                    ErgmGraph::Connected,
                    &["edges", "gwesp", "nodecov:age", "nodecov:gender", "nodefactor:wanted:Grey"],
                ),
            ],
        }
    }
}

impl ErgmSettings {
    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig { burn_in: self.burn_in, interval: self.interval, samples: self.samples, keep_graphs: false }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded. The output directory
    /// and thread count do not affect results and are left out.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.paths.output = None;
        canonical.threads = 0;
        let hash = Sha256::digest(canonical.to_toml().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance { config_digest: self.digest(), seed: self.seed }
    }

    /// Output directory: config value, then `$COAPPEAR_OUT`, then `out`.
    pub fn output_dir(&self) -> PathBuf {
        self.paths
            .output
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = PipelineConfig::default();
        let back: PipelineConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.digest().len(), 64);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: PipelineConfig = toml::from_str("seed = 7\n[cluster]\ncutoff = 0.4\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.cluster.cutoff, 0.4);
        assert_eq!(cfg.cluster.max_iterations, 100);
        assert_ne!(cfg.digest(), PipelineConfig::default().digest());
        assert!(toml::from_str::<PipelineConfig>("[cluster]\ncutof = 0.4\n").is_err());
    }

    #[test]
    fn tuning_grid_is_inclusive() {
        let g = ClusterSettings::default().grid().unwrap();
        assert_eq!(g.len(), 41);
        assert!((g[40] - 0.6).abs() < 1e-12);
    }
}
