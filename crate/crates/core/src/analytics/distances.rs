use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterSet;
use crate::error::{Error, Result};
use crate::separability::hull_distance;

/// Pairwise hull distances between the clusters of every label pair, in
/// canonical `(i, j)`, `i < j` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceVector {
    pub values: Vec<f64>,
    pub pair_order: Vec<(String, String)>,
}

impl DistanceVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of the pair `(i, j)`, `i < j < n`, in the vector.
    pub fn index(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < n);
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    /// For each label, the smallest entry involving it.
    pub fn min_per_label(&self, label_names: &[String]) -> Result<BTreeMap<String, f64>> {
        if label_names.len() < 2 {
            return Err(Error::TooFewLabels(label_names.len()));
        }
        let mut out: BTreeMap<String, f64> = label_names
            .iter()
            .map(|n| (n.clone(), f64::INFINITY))
            .collect();
        for ((a, b), &v) in self.pair_order.iter().zip(&self.values) {
            for name in [a, b] {
                let slot = out
                    .get_mut(name)
                    .ok_or_else(|| Error::LabelSpaceMismatch(format!("unknown label {name}")))?;
                *slot = slot.min(v);
            }
        }
        Ok(out)
    }
}

/// The distance vector of a linear cluster set.
pub fn distance_vector(cs: &ClusterSet) -> Result<DistanceVector> {
    let per_label = cs.cluster_per_label()?;
    let names = cs.source().label_names();
    let n = per_label.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let a = cs.rows_of(per_label[i]);
            let b = cs.rows_of(per_label[j]);
            hull_distance(&a, &b, cs.config()).map(|h| h.distance)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DistanceVector {
        values,
        pair_order: pairs
            .iter()
            .map(|&(i, j)| (names[i].clone(), names[j].clone()))
            .collect(),
    })
}

/// For each label, the minimum hull distance to any other label's cluster.
pub fn min_distance_per_label(cs: &ClusterSet) -> Result<BTreeMap<String, f64>> {
    if cs.n_labels() < 2 {
        return Err(Error::TooFewLabels(cs.n_labels()));
    }
    distance_vector(cs)?.min_per_label(cs.source().label_names())
}

/// Hull distances between every pair of clusters, linear or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDistanceMatrix {
    /// `label` for a label's only cluster, `label#k` for its k-th otherwise.
    pub names: Vec<String>,
    /// Row-major, symmetric, zero diagonal.
    pub values: Vec<f64>,
}

impl ClusterDistanceMatrix {
    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }
}

pub fn distance_matrix(cs: &ClusterSet) -> Result<ClusterDistanceMatrix> {
    let names = cs.source().label_names();
    let mut per_label = vec![0usize; names.len()];
    for c in cs.clusters() {
        per_label[c.label] += 1;
    }
    let mut seen = vec![0usize; names.len()];
    let cluster_names: Vec<String> = cs
        .clusters()
        .iter()
        .map(|c| {
            let k = seen[c.label];
            seen[c.label] += 1;
            if per_label[c.label] == 1 {
                names[c.label].clone()
            } else {
                format!("{}#{k}", names[c.label])
            }
        })
        .collect();
    let m = cs.count();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| hull_distance(&cs.rows_of(i), &cs.rows_of(j), cs.config()).map(|h| h.distance))
        .collect::<Result<Vec<f64>>>()?;
    let mut values = vec![0.0; m * m];
    for (&(i, j), d) in pairs.iter().zip(dists) {
        values[i * m + j] = d;
        values[j * m + i] = d;
    }
    Ok(ClusterDistanceMatrix {
        names: cluster_names,
        values,
    })
}
