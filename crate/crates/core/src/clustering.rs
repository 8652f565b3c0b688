//! Label-pure clusters with pairwise disjoint convex hulls.
//!
//! Clustering is greedy agglomeration. Every row starts as its own cluster.
//! Same-label pairs are popped closest-centroid first and merged only if the
//! merged hull stays more than epsilon away from every cluster of another
//! label. A rejected pair is not retried until one of its sides changes. The
//! result always satisfies purity, coverage and disjointness; its size is an
//! upper bound on the smallest possible partition.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use ordered_float::OrderedFloat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledPointSet;
use crate::error::{Error, OverlapPair, Result};
use crate::separability::{decided, solve_canonical, Mode, SeparabilityConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub label: usize,
    /// Row indices, ascending.
    pub members: Vec<usize>,
}

/// A partition of a [`LabeledPointSet`] into label-pure, hull-disjoint clusters.
#[derive(Debug, Clone)]
pub struct ClusterSet {
    clusters: Vec<Cluster>,
    source: Arc<LabeledPointSet>,
    config: SeparabilityConfig,
    verified: bool,
}

impl ClusterSet {
    /// Clusters ordered by `(label, smallest member)`.
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn source(&self) -> &LabeledPointSet {
        &self.source
    }

    pub fn source_arc(&self) -> &Arc<LabeledPointSet> {
        &self.source
    }

    /// The absolute-epsilon config the clusters were built with.
    pub fn config(&self) -> &SeparabilityConfig {
        &self.config
    }

    /// Outcome of the post-hoc pairwise disjointness check.
    pub fn verified(&self) -> bool {
        self.verified
    }

    pub fn count(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_labels(&self) -> usize {
        self.source.n_labels()
    }

    /// One cluster per label: a linear multiclass separator exists.
    pub fn is_linear(&self) -> bool {
        self.count() == self.n_labels()
    }

    pub fn rows_of(&self, cluster: usize) -> Vec<&[f64]> {
        self.clusters[cluster]
            .members
            .iter()
            .map(|&i| self.source.row(i))
            .collect()
    }

    /// Index of the single cluster of each label, when the set is linear.
    pub fn cluster_per_label(&self) -> Result<Vec<usize>> {
        if !self.is_linear() {
            return Err(Error::NotLinear {
                clusters: self.count(),
                labels: self.n_labels(),
            });
        }
        let mut out = vec![usize::MAX; self.n_labels()];
        for (i, c) in self.clusters.iter().enumerate() {
            out[c.label] = i;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> ClusterSetJson {
        let names = self.source.label_names();
        ClusterSetJson {
            label_names: names.to_vec(),
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterJson {
                    label: names[c.label].clone(),
                    label_id: c.label,
                    members: c.members.clone(),
                })
                .collect(),
            count: self.count(),
            n_labels: self.n_labels(),
            is_linear: self.is_linear(),
            config: self.config,
            verified: self.verified,
        }
    }
}

/// Serialized form of a [`ClusterSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSetJson {
    pub label_names: Vec<String>,
    pub clusters: Vec<ClusterJson>,
    pub count: usize,
    pub n_labels: usize,
    pub is_linear: bool,
    pub config: SeparabilityConfig,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterJson {
    pub label: String,
    pub label_id: usize,
    pub members: Vec<usize>,
}

pub fn count_clusters(cs: &ClusterSet) -> usize {
    cs.count()
}

pub fn is_linear(cs: &ClusterSet) -> bool {
    cs.is_linear()
}

struct Working {
    label: usize,
    members: Vec<usize>,
    centroid: Vec<f64>,
    radius: f64,
}

impl Working {
    fn new(set: &LabeledPointSet, label: usize, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        let dim = set.dim();
        let mut centroid = vec![0.0; dim];
        for &m in &members {
            for (c, v) in centroid.iter_mut().zip(set.row(m)) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= members.len() as f64);
        let radius = members
            .iter()
            .map(|&m| dist(&centroid, set.row(m)))
            .fold(0.0, f64::max);
        Self {
            label,
            members,
            centroid,
            radius,
        }
    }

    fn min_member(&self) -> usize {
        self.members[0]
    }

    /// Lower bound on the hull distance to `other`.
    fn sphere_gap(&self, other: &Working) -> f64 {
        dist(&self.centroid, &other.centroid) - self.radius - other.radius
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    distance: OrderedFloat<f64>,
    label: usize,
    first_min: usize,
    second_min: usize,
    first: usize,
    second: usize,
}

fn candidate(ws: &[Option<Working>], x: usize, y: usize) -> Candidate {
    let (wx, wy) = (ws[x].as_ref().unwrap(), ws[y].as_ref().unwrap());
    let (first, second) = if wx.min_member() <= wy.min_member() { (x, y) } else { (y, x) };
    let (f, s) = (ws[first].as_ref().unwrap(), ws[second].as_ref().unwrap());
    Candidate {
        distance: OrderedFloat(dist(&f.centroid, &s.centroid)),
        label: f.label,
        first_min: f.min_member(),
        second_min: s.min_member(),
        first,
        second,
    }
}

/// Cross-label row pairs closer than `epsilon`, sorted by row indices.
pub fn overlapping_pairs(set: &LabeledPointSet, epsilon: f64) -> Vec<OverlapPair> {
    let n = set.len();
    let eps2 = epsilon * epsilon;
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let ri = set.row(i);
            let li = set.label(i);
            (i + 1..n).filter_map(move |j| {
                if set.label(j) == li {
                    return None;
                }
                let rj = set.row(j);
                let d2: f64 = ri.iter().zip(rj).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2 <= eps2).then(|| OverlapPair {
                    row_a: i,
                    row_b: j,
                    label_a: set.label_name(li).to_string(),
                    label_b: set.label_name(set.label(j)).to_string(),
                    distance: d2.sqrt(),
                })
            })
        })
        .collect()
}

fn rows<'a>(set: &'a LabeledPointSet, members: &[usize]) -> Vec<&'a [f64]> {
    members.iter().map(|&i| set.row(i)).collect()
}

/// True when the two member lists have ε-disjoint hulls.
fn disjoint(set: &LabeledPointSet, a: &Working, b: &Working, cfg: &SeparabilityConfig) -> Result<bool> {
    if a.sphere_gap(b) > cfg.epsilon {
        return Ok(true);
    }
    let (ra, rb) = (rows(set, &a.members), rows(set, &b.members));
    let sol = solve_canonical(&ra, &rb, cfg, Mode::Decide(cfg.epsilon))?;
    Ok(decided(&sol, cfg.epsilon))
}

/// Checks `merged` against `others`, closest bounding spheres first, in
/// parallel chunks. Stops at the first chunk containing a failure.
fn merge_allowed(
    set: &LabeledPointSet,
    merged: &Working,
    others: &[&Working],
    cfg: &SeparabilityConfig,
) -> Result<bool> {
    let mut near: Vec<(f64, &Working)> = others
        .iter()
        .map(|o| (merged.sphere_gap(o), *o))
        .filter(|(gap, _)| *gap <= cfg.epsilon)
        .collect();
    near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.min_member().cmp(&y.1.min_member())));
    let chunk = (2 * rayon::current_num_threads()).max(1);
    for group in near.chunks(chunk) {
        let results: Vec<Result<bool>> = group
            .par_iter()
            .map(|(_, o)| disjoint(set, merged, o, cfg))
            .collect();
        for r in results {
            if !r? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Partitions `set` into label-pure clusters with ε-disjoint hulls.
///
/// Fails with [`Error::IrreducibleOverlap`] when rows of different labels lie
/// within epsilon of each other, since no partition can then exist.
pub fn cluster(set: impl Into<Arc<LabeledPointSet>>, cfg: &SeparabilityConfig) -> Result<ClusterSet> {
    cfg.validate()?;
    let source: Arc<LabeledPointSet> = set.into();
    let set = &*source;
    let cfg = cfg.resolved(set.rows());

    let overlaps = overlapping_pairs(set, cfg.epsilon);
    if !overlaps.is_empty() {
        return Err(Error::IrreducibleOverlap { pairs: overlaps });
    }

    let mut ws: Vec<Option<Working>> = (0..set.len())
        .map(|i| Some(Working::new(set, set.label(i), vec![i])))
        .collect();
    let mut heap = BinaryHeap::new();
    for label in 0..set.n_labels() {
        let rows = set.rows_with_label(label);
        for (k, &x) in rows.iter().enumerate() {
            for &y in &rows[k + 1..] {
                heap.push(Reverse(candidate(&ws, x, y)));
            }
        }
    }

    while let Some(Reverse(c)) = heap.pop() {
        if ws[c.first].is_none() || ws[c.second].is_none() {
            continue;
        }
        let (x, y) = (ws[c.first].as_ref().unwrap(), ws[c.second].as_ref().unwrap());
        let members: Vec<usize> = x.members.iter().chain(&y.members).copied().collect();
        let merged = Working::new(set, c.label, members);
        let others: Vec<&Working> = ws
            .iter()
            .flatten()
            .filter(|w| w.label != c.label)
            .collect();
        if !merge_allowed(set, &merged, &others, &cfg)? {
            continue;
        }
        ws[c.first] = None;
        ws[c.second] = None;
        let id = ws.len();
        ws.push(Some(merged));
        let peers: Vec<usize> = ws
            .iter()
            .enumerate()
            .filter_map(|(j, w)| match w {
                Some(w) if j != id && w.label == c.label => Some(j),
                _ => None,
            })
            .collect();
        for j in peers {
            heap.push(Reverse(candidate(&ws, id, j)));
        }
    }

    let mut clusters: Vec<Cluster> = ws
        .into_iter()
        .flatten()
        .map(|w| Cluster {
            label: w.label,
            members: w.members,
        })
        .collect();
    clusters.sort_by(|a, b| (a.label, a.members[0]).cmp(&(b.label, b.members[0])));

    let verified = verify(set, &clusters, &cfg)?;
    if !verified {
        log::warn!("post-hoc disjointness check failed");
    }
    Ok(ClusterSet {
        clusters,
        source,
        config: cfg,
        verified,
    })
}

/// Re-checks purity, coverage and pairwise ε-disjointness of `clusters`.
pub fn verify(set: &LabeledPointSet, clusters: &[Cluster], cfg: &SeparabilityConfig) -> Result<bool> {
    let mut seen = vec![false; set.len()];
    for c in clusters {
        for &m in &c.members {
            if m >= set.len() || seen[m] || set.label(m) != c.label {
                return Ok(false);
            }
            seen[m] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Ok(false);
    }
    let ws: Vec<Working> = clusters
        .iter()
        .map(|c| Working::new(set, c.label, c.members.clone()))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..ws.len())
        .flat_map(|i| (i + 1..ws.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| ws[i].label != ws[j].label)
        .collect();
    let results: Vec<Result<bool>> = pairs
        .par_iter()
        .map(|&(i, j)| disjoint(set, &ws[i], &ws[j], cfg))
        .collect();
    for r in results {
        if !r? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> LabeledPointSet {
        let mut rows = Vec::new();
        let mut names = Vec::new();
        for (cx, cy, name) in [(0.0, 0.0, "a"), (10.0, 0.0, "b"), (0.0, 10.0, "c")] {
            for k in 0..6 {
                let t = k as f64;
                rows.push(vec![cx + 0.3 * (t * 1.7).sin(), cy + 0.3 * (t * 2.3).cos()]);
                names.push(name);
            }
        }
        LabeledPointSet::from_rows(&rows, &names).unwrap()
    }

    fn xor() -> LabeledPointSet {
        let mut rows = Vec::new();
        let mut names = Vec::new();
        for (cx, cy, name) in [(0.0, 0.0, "X"), (1.0, 1.0, "X"), (0.0, 1.0, "O"), (1.0, 0.0, "O")] {
            for k in 0..4 {
                let t = k as f64;
                rows.push(vec![cx + 0.05 * (t * 1.3).sin(), cy + 0.05 * (t * 0.7).cos()]);
                names.push(name);
            }
        }
        LabeledPointSet::from_rows(&rows, &names).unwrap()
    }

    #[test]
    fn separable_blobs_give_one_cluster_per_label() {
        let cs = cluster(blobs(), &SeparabilityConfig::default()).unwrap();
        assert_eq!(count_clusters(&cs), 3);
        assert!(is_linear(&cs));
        assert!(cs.verified());
        assert_eq!(cs.cluster_per_label().unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn xor_is_not_linear() {
        // One label's diagonal can merge without touching the other label's
        // two blobs, so three clusters is the minimum here.
        let cs = cluster(xor(), &SeparabilityConfig::default()).unwrap();
        assert_eq!(cs.count(), 3);
        assert!(!cs.is_linear());
        assert!(cs.verified());
        assert!(matches!(cs.cluster_per_label(), Err(Error::NotLinear { clusters: 3, labels: 2 })));
        let o = cs.clusters().iter().filter(|c| c.label == 0).count();
        assert_eq!(o, 1, "the first label's diagonal is merged first");
    }

    #[test]
    fn shared_point_is_irreducible() {
        let set = LabeledPointSet::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]], &["a", "a", "b"])
            .unwrap();
        match cluster(set, &SeparabilityConfig::default()) {
            Err(Error::IrreducibleOverlap { pairs }) => {
                assert_eq!(pairs.len(), 1);
                assert_eq!((pairs[0].row_a, pairs[0].row_b), (0, 2));
                assert_eq!((pairs[0].label_a.as_str(), pairs[0].label_b.as_str()), ("a", "b"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_label_is_one_cluster() {
        let set = LabeledPointSet::from_rows(&[[0.0], [5.0], [2.0]], &["z", "z", "z"]).unwrap();
        let cs = cluster(set, &SeparabilityConfig::default()).unwrap();
        assert_eq!(cs.count(), 1);
        assert!(cs.is_linear());
        assert_eq!(cs.clusters()[0].members, vec![0, 1, 2]);
    }

    #[test]
    fn json_shape() {
        let cs = cluster(xor(), &SeparabilityConfig::default()).unwrap();
        let json = serde_json::to_value(cs.to_json()).unwrap();
        assert_eq!(json["count"], 3);
        assert_eq!(json["is_linear"], false);
        assert_eq!(json["verified"], true);
        assert_eq!(json["label_names"][0], "O");
        assert_eq!(json["clusters"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn verify_catches_broken_partitions() {
        let set = xor();
        let cfg = SeparabilityConfig::default();
        let x = set.rows_with_label(set.label_id("X").unwrap());
        let o = set.rows_with_label(set.label_id("O").unwrap());
        let bad = vec![
            Cluster { label: set.label_id("X").unwrap(), members: x.clone() },
            Cluster { label: set.label_id("O").unwrap(), members: o.clone() },
        ];
        assert!(!verify(&set, &bad, &cfg).unwrap());
        let missing = vec![Cluster { label: set.label_id("X").unwrap(), members: x }];
        assert!(!verify(&set, &missing, &cfg).unwrap());
    }
}
