use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_point_set, LabeledPointSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesAxis {
    FineTuningSteps,
    Layers,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub index: u64,
    pub set: LabeledPointSet,
}

/// Embeddings of the same rows captured at successive steps or layers.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    axis: SeriesAxis,
    steps: Vec<Snapshot>,
}

impl SnapshotSeries {
    /// Validates ordering and the shared label space.
    pub fn new(axis: SeriesAxis, steps: Vec<Snapshot>) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| Error::EmptySeries(PathBuf::new()))?;
        for w in steps.windows(2) {
            if w[1].index <= w[0].index {
                return Err(Error::InvalidPointSet(format!(
                    "snapshot indices must increase strictly ({} then {})",
                    w[0].index, w[1].index
                )));
            }
        }
        for s in &steps[1..] {
            if s.set.label_names() != first.set.label_names() {
                return Err(Error::InconsistentLabelSpace(format!(
                    "step {} has labels {:?}, step {} has {:?}",
                    first.index,
                    first.set.label_names(),
                    s.index,
                    s.set.label_names()
                )));
            }
            if s.set.len() != first.set.len() || s.set.labels() != first.set.labels() {
                return Err(Error::InconsistentLabelSpace(format!(
                    "step {} assigns labels to rows differently from step {}",
                    s.index, first.index
                )));
            }
        }
        Ok(Self { axis, steps })
    }

    pub fn axis(&self) -> SeriesAxis {
        self.axis
    }

    pub fn steps(&self) -> &[Snapshot] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn first(&self) -> &LabeledPointSet {
        &self.steps[0].set
    }

    pub fn label_names(&self) -> &[String] {
        self.first().label_names()
    }
}

fn numbered(name: &str, prefix: &str, suffix: &str) -> Option<u64> {
    name.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<(String, PathBuf, bool)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let is_dir = entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_dir();
        out.push((entry.file_name().to_string_lossy().into_owned(), entry.path(), is_dir));
    }
    out.sort();
    Ok(out)
}

fn layer_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut layers: Vec<(u64, PathBuf)> = read_dir_sorted(dir)?
        .into_iter()
        .filter(|(_, _, is_dir)| !is_dir)
        .filter_map(|(name, path, _)| numbered(&name, "layer-", ".embv").map(|l| (l, path)))
        .collect();
    layers.sort();
    Ok(layers)
}

/// Loads a run directory.
///
/// Two layouts are recognized:
/// * `step-<k>/layer-<l>.embv` subdirectories, one snapshot per step. `layer`
///   picks the file inside each step; when `None` the highest layer present
///   in the first step is used. A `labels.tsv` inside a step directory
///   overrides the run-level one.
/// * `layer-<l>.embv` files directly in the directory, one snapshot per layer.
///
/// Both read the shared `<dir>/labels.tsv`.
pub fn load_series(dir: &Path, layer: Option<u64>) -> Result<SnapshotSeries> {
    let shared_labels = dir.join("labels.tsv");
    let mut step_dirs: Vec<(u64, PathBuf)> = read_dir_sorted(dir)?
        .into_iter()
        .filter(|(_, _, is_dir)| *is_dir)
        .filter_map(|(name, path, _)| numbered(&name, "step-", "").map(|k| (k, path)))
        .collect();
    step_dirs.sort();

    if !step_dirs.is_empty() {
        let layer = match layer {
            Some(l) => l,
            None => layer_files(&step_dirs[0].1)?
                .last()
                .map(|(l, _)| *l)
                .ok_or_else(|| Error::EmptySeries(step_dirs[0].1.clone()))?,
        };
        let mut steps = Vec::with_capacity(step_dirs.len());
        for (k, path) in step_dirs {
            let local = path.join("labels.tsv");
            let labels = if local.is_file() { local } else { shared_labels.clone() };
            let set = load_point_set(&path.join(format!("layer-{layer}.embv")), &labels)?;
            steps.push(Snapshot { index: k, set });
        }
        return SnapshotSeries::new(SeriesAxis::FineTuningSteps, steps);
    }

    let layers = layer_files(dir)?;
    if layers.is_empty() {
        return Err(Error::EmptySeries(dir.to_path_buf()));
    }
    let steps = layers
        .into_iter()
        .map(|(l, path)| {
            load_point_set(&path, &shared_labels).map(|set| Snapshot { index: l, set })
        })
        .collect::<Result<Vec<_>>>()?;
    SnapshotSeries::new(SeriesAxis::Layers, steps)
}
