use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod svg;

use config::{GlobalArgs, ProbeArgs, RunConfig};

/// Geometry of labeled embedding spaces: clusters, hull distances and their
/// dynamics across snapshots.
#[derive(Parser)]
#[command(name = "hullprobe", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition points into label-pure clusters with disjoint hulls
    Cluster { embv: PathBuf, labels: PathBuf },

    /// Hull distances between clusters and per-label minimum distances
    Distances { embv: PathBuf, labels: PathBuf },

    /// Correlation of two representations' distance vectors
    Similarity {
        embv_a: PathBuf,
        labels_a: PathBuf,
        embv_b: PathBuf,
        labels_b: PathBuf,
    },

    /// Metrics of every snapshot in a run directory, with plots
    Track {
        run_dir: PathBuf,
        /// Layer file to read in each step directory (default: highest)
        #[arg(long)]
        layer: Option<u64>,
    },

    /// Per-label minimum-distance changes between two representations
    Crosstask {
        baseline_embv: PathBuf,
        baseline_labels: PathBuf,
        tuned_embv: PathBuf,
        tuned_labels: PathBuf,
    },

    /// Grid-search and train the classifier probe, then score it on test data
    Probe {
        train_embv: PathBuf,
        train_labels: PathBuf,
        test_embv: PathBuf,
        test_labels: PathBuf,
        #[command(flatten)]
        probe: ProbeArgs,
    },
}

fn run(cli: Cli) -> Result<()> {
    let (probe, layer) = match &cli.command {
        Command::Probe { probe, .. } => (Some(probe), None),
        Command::Track { layer, .. } => (None, *layer),
        _ => (None, None),
    };
    let cfg = RunConfig::resolve(&cli.global, probe, layer)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    commands::prepare(&cfg)?;
    match &cli.command {
        Command::Cluster { embv, labels } => commands::cluster_cmd(&cfg, embv, labels),
        Command::Distances { embv, labels } => commands::distances_cmd(&cfg, embv, labels),
        Command::Similarity {
            embv_a,
            labels_a,
            embv_b,
            labels_b,
        } => commands::similarity_cmd(&cfg, (embv_a, labels_a), (embv_b, labels_b)),
        Command::Track { run_dir, .. } => commands::track_cmd(&cfg, run_dir),
        Command::Crosstask {
            baseline_embv,
            baseline_labels,
            tuned_embv,
            tuned_labels,
        } => commands::crosstask_cmd(&cfg, (baseline_embv, baseline_labels), (tuned_embv, tuned_labels)),
        Command::Probe {
            train_embv,
            train_labels,
            test_embv,
            test_labels,
            ..
        } => commands::probe_cmd(&cfg, (train_embv, train_labels), (test_embv, test_labels)),
    }
}

/// 2 when the data admits no valid clustering, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let overlap = err
        .chain()
        .any(|c| matches!(c.downcast_ref::<hullprobe::Error>(), Some(hullprobe::Error::IrreducibleOverlap { .. })));
    if overlap {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version go to stdout and succeed; usage errors are 1.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
