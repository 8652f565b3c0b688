use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hullprobe::probe::{GridSpace, ProbeConfig};
use hullprobe::SeparabilityConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Hulls closer than this count as overlapping
    #[arg(long, global = true)]
    pub eps: Option<f64>,

    /// Relative duality-gap tolerance of the nearest-point solver
    #[arg(long, global = true)]
    pub gap_tol: Option<f64>,

    /// Iteration cap of the nearest-point solver
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,

    /// Scale --eps by the mean row norm of each dataset
    #[arg(long, global = true)]
    pub relative_eps: bool,

    /// Seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: available cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Report formats to write
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,

    /// JSON run configuration; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Labels per group (largest increase, largest decrease) in dynamics plots
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
}

/// Probe settings from flags.
#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Hidden layer widths to search (each layer independently)
    #[arg(long, value_delimiter = ',')]
    pub hidden_sizes: Option<Vec<usize>>,

    /// Regularizer weights to search
    #[arg(long, value_delimiter = ',')]
    pub reg_weights: Option<Vec<f64>>,

    /// Networks trained per reported configuration
    #[arg(long)]
    pub seeds: Option<usize>,

    /// Maximum training epochs
    #[arg(long)]
    pub max_epochs: Option<usize>,

    #[arg(long)]
    pub learning_rate: Option<f64>,

    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileProbe {
    hidden_sizes: Option<Vec<usize>>,
    reg_weights: Option<Vec<f64>>,
    seeds: Option<usize>,
    max_epochs: Option<usize>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
}

/// The optional JSON config file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    eps: Option<f64>,
    gap_tol: Option<f64>,
    max_iterations: Option<usize>,
    relative_eps: Option<bool>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    formats: Option<Vec<Format>>,
    top_k: Option<usize>,
    layer: Option<u64>,
    probe: FileProbe,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub separability: SeparabilityConfig,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub formats: BTreeSet<Format>,
    pub top_k: usize,
    pub layer: Option<u64>,
    pub probe: ProbeConfig,
    pub grid: GridSpace,
}

impl RunConfig {
    pub fn resolve(global: &GlobalArgs, probe: Option<&ProbeArgs>, layer: Option<u64>) -> Result<Self> {
        let file = match &global.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let defaults = SeparabilityConfig::default();
        let separability = SeparabilityConfig {
            epsilon: global.eps.or(file.eps).unwrap_or(defaults.epsilon),
            gap_tol: global.gap_tol.or(file.gap_tol).unwrap_or(defaults.gap_tol),
            max_iterations: global.max_iterations.or(file.max_iterations),
            relative_eps: global.relative_eps || file.relative_eps.unwrap_or(false),
        };
        separability.validate()?;

        let formats: BTreeSet<Format> = global
            .format
            .clone()
            .or(file.formats)
            .unwrap_or_else(|| vec![Format::Json, Format::Csv, Format::Svg])
            .into_iter()
            .collect();
        if formats.is_empty() {
            bail!("at least one output format is required");
        }

        let fp = file.probe;
        let pa = probe;
        let base = ProbeConfig::default();
        let grid_default = GridSpace::default();
        let grid = GridSpace {
            hidden_sizes: pa
                .and_then(|p| p.hidden_sizes.clone())
                .or(fp.hidden_sizes)
                .unwrap_or(grid_default.hidden_sizes),
            reg_weights: pa
                .and_then(|p| p.reg_weights.clone())
                .or(fp.reg_weights)
                .unwrap_or(grid_default.reg_weights),
        };
        if grid.hidden_sizes.is_empty() || grid.reg_weights.is_empty() {
            bail!("the probe grid needs at least one hidden size and one regularizer weight");
        }
        let probe_cfg = ProbeConfig {
            seeds: pa.and_then(|p| p.seeds).or(fp.seeds).unwrap_or(base.seeds),
            max_iterations: pa
                .and_then(|p| p.max_epochs)
                .or(fp.max_epochs)
                .unwrap_or(base.max_iterations),
            learning_rate: pa
                .and_then(|p| p.learning_rate)
                .or(fp.learning_rate)
                .unwrap_or(base.learning_rate),
            batch_size: pa.and_then(|p| p.batch_size).or(fp.batch_size),
            ..base
        };

        Ok(Self {
            separability,
            seed: global.seed.or(file.seed).unwrap_or(0),
            threads: global.threads.or(file.threads),
            out: global.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            formats,
            top_k: global.top_k.or(file.top_k).unwrap_or(3),
            layer: layer.or(file.layer),
            probe: probe_cfg,
            grid,
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}
