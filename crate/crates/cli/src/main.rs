use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coappear::config::{PipelineConfig, OUTPUT_DIR_ENV};
use coappear::graph_io::GraphFormat;
use coappear::pipeline::{self, Context};
use coappear::{CliError, Result};
use coappear_core::synth::SynthConfig;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "coappear", version, about = "Face clustering, co-appearance networks and their analysis")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Face clustering distance cutoff.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    /// Graph file format.
    #[arg(long, global = true, value_enum)]
    format: Option<GraphFormat>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    faces: Option<PathBuf>,
    #[arg(long, global = true)]
    images: Option<PathBuf>,
    #[arg(long, global = true)]
    watchlist: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus with planted identities.
    Synth(SynthArgs),
    /// Cluster face embeddings with Chinese Whispers.
    Cluster,
    /// Sweep the clustering cutoff against labelled images.
    Tune,
    /// Build the weighted co-appearance graph.
    BuildGraph,
    /// Centralities, degree distribution and small-world statistics.
    Metrics,
    /// Random and opportunistic node removal.
    Robustness,
    /// Match clusters against the watchlist.
    Match,
    /// Regress reward on image count and centralities.
    Regress {
        /// Drop the top reward tier.
        #[arg(long)]
        exclude_red: bool,
    },
    /// Fit the configured exponential random graph models.
    Ergm,
    /// Run every stage and write report.json.
    Report {
        #[arg(long)]
        skip_ergm: bool,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 30)]
    identities: usize,
    #[arg(long, default_value_t = 20)]
    faces_per_identity: usize,
    #[arg(long, default_value_t = 0)]
    watchlisted: usize,
    #[arg(long, default_value_t = 0)]
    decoys: usize,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 5)]
    max_group_size: usize,
    #[arg(long, default_value_t = 1.0)]
    popularity_exponent: f64,
    /// Share of identities that only appear alone.
    #[arg(long, default_value_t = 0.0)]
    loner_fraction: f64,
}

fn resolve(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.cutoff {
        cfg.cluster.cutoff = v;
    }
    if let Some(v) = g.format {
        cfg.graph.format = v;
    }
    if let Some(v) = g.threads {
        cfg.threads = v;
    }
    if let Some(v) = &g.out {
        cfg.paths.output = Some(v.clone());
    }
    if let Some(v) = &g.faces {
        cfg.paths.faces = v.clone();
    }
    if let Some(v) = &g.images {
        cfg.paths.images = v.clone();
    }
    if let Some(v) = &g.watchlist {
        cfg.paths.watchlist = v.clone();
    }
    Ok(cfg)
}

fn emit<T: Serialize>(value: T) -> Result<()> {
    let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Config(e.to_string()))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(resolve(&cli.global)?)?;
    match cli.command {
        Command::Synth(a) => {
            let mut synth = SynthConfig {
                identities: a.identities,
                faces_per_identity: a.faces_per_identity,
                watchlisted: a.watchlisted,
                decoys: a.decoys,
                loner_fraction: a.loner_fraction,
                max_group_size: a.max_group_size,
                popularity_exponent: a.popularity_exponent,
                seed: ctx.config.seed,
                ..SynthConfig::default()
            };
            if let Some(n) = a.noise {
                synth.noise = n;
            }
            emit(pipeline::synth(&ctx, &synth)?)
        }
        Command::Cluster => emit(pipeline::cluster(&ctx)?),
        Command::Tune => emit(pipeline::tune(&ctx)?),
        Command::BuildGraph => emit(pipeline::build_graph(&ctx)?),
        Command::Metrics => emit(pipeline::metrics(&ctx)?),
        Command::Robustness => emit(pipeline::robustness(&ctx)?),
        Command::Match => emit(pipeline::match_watchlist(&ctx)?),
        Command::Regress { exclude_red } => emit(pipeline::regress(&ctx, exclude_red)?),
        Command::Ergm => emit(pipeline::ergm(&ctx, true)?),
        Command::Report { skip_ergm } => emit(pipeline::report(&ctx, !skip_ergm)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::to_string(&e.record()).unwrap_or_else(|_| format!("{{\"error\":\"{e}\"}}"));
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
