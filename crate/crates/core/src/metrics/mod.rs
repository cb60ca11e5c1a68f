//! Network measures: centralities, degree-distribution fit, clustering,
//! path lengths, random reference graphs and small-world statistics.

mod centrality;
mod generators;
mod power_law;
mod topology;

pub use centrality::{
    betweenness_centrality, centrality_report, degree_centrality, eigenvector_centrality, CentralityReport,
    EigenOptions, Weighting,
};
pub use generators::{erdos_renyi_gnm, watts_strogatz};
pub use power_law::{approximate_alpha, fit_power_law, PowerLawFit};
pub use topology::{
    average_shortest_path, clustering_coefficient, small_world, small_world_against, topology_report, Clustering,
    SmallWorld, TopologyReport, DEFAULT_REFERENCE_COUNT,
};
