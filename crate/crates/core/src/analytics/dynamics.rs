use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{distance_vector, spatial_similarity, DistanceVector};
use crate::clustering::cluster;
use crate::dataset::{LabeledPointSet, SeriesAxis, SnapshotSeries};
use crate::error::{Error, Result};
use crate::separability::SeparabilityConfig;

/// Metrics of one snapshot. Vector-borne fields are `None` when the snapshot
/// (or, for the similarity, the first snapshot) is not linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub index: u64,
    pub cluster_count: usize,
    pub is_linear: bool,
    pub verified: bool,
    pub min_distances: Option<BTreeMap<String, f64>>,
    pub centroids: BTreeMap<String, Vec<f64>>,
    pub similarity_to_origin: Option<f64>,
    pub distance_vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub axis: SeriesAxis,
    pub label_names: Vec<String>,
    pub steps: Vec<StepReport>,
}

struct StepResult {
    report: StepReport,
    vector: Option<DistanceVector>,
}

fn analyze_step(index: u64, set: &LabeledPointSet, cfg: &SeparabilityConfig) -> Result<StepResult> {
    let cs = cluster(set.clone(), cfg)?;
    let centroids = centroid_map(set)?;
    let vector = match distance_vector(&cs) {
        Ok(v) => Some(v),
        Err(Error::NotLinear { .. }) => None,
        Err(e) => return Err(e),
    };
    let min_distances = match &vector {
        Some(v) if set.n_labels() >= 2 => Some(v.min_per_label(set.label_names())?),
        _ => None,
    };
    Ok(StepResult {
        report: StepReport {
            index,
            cluster_count: cs.count(),
            is_linear: cs.is_linear(),
            verified: cs.verified(),
            min_distances,
            centroids,
            similarity_to_origin: None,
            distance_vector: vector.as_ref().map(|v| v.values.clone()),
        },
        vector,
    })
}

fn centroid_map(set: &LabeledPointSet) -> Result<BTreeMap<String, Vec<f64>>> {
    (0..set.n_labels())
        .map(|l| set.centroid(l).map(|c| (set.label_name(l).to_string(), c)))
        .collect()
}

/// Clusters every snapshot and reports minimum distances, centroids and the
/// similarity of each snapshot's distance vector to the first one.
pub fn track_series(series: &SnapshotSeries, cfg: &SeparabilityConfig) -> Result<TrackReport> {
    if series.is_empty() {
        return Err(Error::EmptySeries(Default::default()));
    }
    let mut results = series
        .steps()
        .par_iter()
        .map(|s| analyze_step(s.index, &s.set, cfg))
        .collect::<Result<Vec<_>>>()?;

    let origin = results[0].vector.clone();
    for (k, r) in results.iter_mut().enumerate() {
        r.report.similarity_to_origin = match (&origin, &r.vector) {
            (Some(_), Some(_)) if k == 0 => Some(1.0),
            (Some(o), Some(v)) => match spatial_similarity(o, v) {
                Ok(s) => Some(s),
                Err(Error::ZeroVariance) => None,
                Err(e) => return Err(e),
            },
            _ => None,
        };
    }
    Ok(TrackReport {
        axis: series.axis(),
        label_names: series.label_names().to_vec(),
        steps: results.into_iter().map(|r| r.report).collect(),
    })
}

/// Per-label sequence of centroids across the series.
pub fn centroid_paths(series: &SnapshotSeries) -> Result<BTreeMap<String, Vec<Vec<f64>>>> {
    let mut out: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for s in series.steps() {
        for (name, c) in centroid_map(&s.set)? {
            out.entry(name).or_default().push(c);
        }
    }
    Ok(out)
}

/// `centroid(after) − centroid(before)` for every label.
pub fn difference_vectors(
    before: &LabeledPointSet,
    after: &LabeledPointSet,
) -> Result<BTreeMap<String, Vec<f64>>> {
    if before.label_names() != after.label_names() {
        return Err(Error::InconsistentLabelSpace(format!(
            "{:?} vs {:?}",
            before.label_names(),
            after.label_names()
        )));
    }
    if before.dim() != after.dim() {
        return Err(Error::DimensionMismatch {
            left: before.dim(),
            right: after.dim(),
        });
    }
    let b = centroid_map(before)?;
    let a = centroid_map(after)?;
    Ok(b.into_iter()
        .map(|(name, cb)| {
            let ca = &a[&name];
            let diff = ca.iter().zip(&cb).map(|(x, y)| x - y).collect();
            (name, diff)
        })
        .collect())
}

impl TrackReport {
    /// `step,cluster_count,is_linear,verified,similarity_to_origin`; the last
    /// column is empty when unavailable.
    pub fn write_steps_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "cluster_count", "is_linear", "verified", "similarity_to_origin"])?;
        for s in &self.steps {
            w.write_record([
                s.index.to_string(),
                s.cluster_count.to_string(),
                s.is_linear.to_string(),
                s.verified.to_string(),
                s.similarity_to_origin.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    /// `step,label,min_distance`, one row per available (step, label).
    pub fn write_min_distances_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "label", "min_distance"])?;
        for s in &self.steps {
            if let Some(m) = &s.min_distances {
                for (label, d) in m {
                    w.write_record([s.index.to_string(), label.clone(), d.to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Labels ordered by the change of their minimum distance between the
    /// first and last snapshots with data, largest increase first.
    pub fn labels_by_increase(&self) -> Vec<(String, f64)> {
        let with: Vec<&BTreeMap<String, f64>> =
            self.steps.iter().filter_map(|s| s.min_distances.as_ref()).collect();
        let (Some(first), Some(last)) = (with.first(), with.last()) else {
            return Vec::new();
        };
        let mut out: Vec<(String, f64)> = first
            .iter()
            .map(|(l, d0)| (l.clone(), last[l] - d0))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}
