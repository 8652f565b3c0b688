use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::min_distance_per_label;
use crate::clustering::ClusterSet;
use crate::error::{Error, Result};

/// Changes with `|delta|` at or below this count as unchanged.
pub const UNCHANGED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDelta {
    pub baseline: f64,
    pub tuned: f64,
    pub delta: f64,
}

/// How each label's minimum distance moved between two representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTaskReport {
    pub num_increased: usize,
    pub num_decreased: usize,
    pub num_unchanged: usize,
    pub average_change: f64,
    pub per_label_delta: BTreeMap<String, LabelDelta>,
}

pub fn cross_task_report(baseline: &ClusterSet, tuned: &ClusterSet) -> Result<CrossTaskReport> {
    if baseline.source().label_names() != tuned.source().label_names() {
        return Err(Error::LabelSpaceMismatch(format!(
            "{:?} vs {:?}",
            baseline.source().label_names(),
            tuned.source().label_names()
        )));
    }
    let base = min_distance_per_label(baseline)?;
    let tune = min_distance_per_label(tuned)?;
    Ok(from_min_distances(&base, &tune))
}

/// Builds the report from two per-label minimum-distance maps with equal keys.
pub fn from_min_distances(
    baseline: &BTreeMap<String, f64>,
    tuned: &BTreeMap<String, f64>,
) -> CrossTaskReport {
    let mut per_label_delta = BTreeMap::new();
    let (mut inc, mut dec, mut same) = (0, 0, 0);
    let mut total = 0.0;
    for (label, &b) in baseline {
        let t = tuned[label];
        let delta = t - b;
        if delta > UNCHANGED_TOL {
            inc += 1;
        } else if delta < -UNCHANGED_TOL {
            dec += 1;
        } else {
            same += 1;
        }
        total += delta;
        per_label_delta.insert(
            label.clone(),
            LabelDelta {
                baseline: b,
                tuned: t,
                delta,
            },
        );
    }
    CrossTaskReport {
        num_increased: inc,
        num_decreased: dec,
        num_unchanged: same,
        average_change: if baseline.is_empty() {
            0.0
        } else {
            total / baseline.len() as f64
        },
        per_label_delta,
    }
}

impl CrossTaskReport {
    /// `num_increased,num_decreased,num_unchanged,average_change`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["num_increased", "num_decreased", "num_unchanged", "average_change"])?;
        w.write_record([
            self.num_increased.to_string(),
            self.num_decreased.to_string(),
            self.num_unchanged.to_string(),
            self.average_change.to_string(),
        ])?;
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    /// `label,baseline_min_distance,tuned_min_distance,delta`.
    pub fn write_labels_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "baseline_min_distance", "tuned_min_distance", "delta"])?;
        for (label, d) in &self.per_label_delta {
            w.write_record([
                label.clone(),
                d.baseline.to_string(),
                d.tuned.to_string(),
                d.delta.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}
