//! Labeled embedding data: the in-memory point set, its on-disk formats and
//! snapshot series.
//!
//! A [`LabeledPointSet`] is immutable once built. Label ids always refer to
//! the lexicographically sorted list of label names, so two sets built from
//! the same label vocabulary agree on every id no matter what order the rows
//! arrived in.

mod embv;
mod labels;
mod series;

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

pub use embv::{read_embv, write_embv, EmbeddingHeader, EMBV_DTYPE, EMBV_MAGIC};
pub use labels::{read_labels, write_labels};
pub use series::{load_series, SeriesAxis, Snapshot, SnapshotSeries};

/// An N×D matrix of finite coordinates with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointSet {
    points: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    label_names: Vec<String>,
}

/// One token pair for [`LabeledPointSet::concat_pairs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPair {
    pub head: usize,
    pub modifier: usize,
    pub label: String,
}

impl IndexPair {
    pub fn new(head: usize, modifier: usize, label: impl Into<String>) -> Self {
        Self {
            head,
            modifier,
            label: label.into(),
        }
    }
}

impl LabeledPointSet {
    /// Builds a set from row-major coordinates and one label name per row.
    pub fn from_named<S: AsRef<str>>(points: Vec<f64>, dim: usize, names: &[S]) -> Result<Self> {
        let vocab: BTreeSet<&str> = names.iter().map(AsRef::as_ref).collect();
        let label_names: Vec<String> = vocab.iter().map(|s| s.to_string()).collect();
        let labels = names
            .iter()
            .map(|n| {
                label_names
                    .binary_search_by(|probe| probe.as_str().cmp(n.as_ref()))
                    .expect("name comes from the vocabulary")
            })
            .collect();
        Self::validated(points, dim, labels, label_names)
    }

    /// Builds a set from rows of equal length and one label name per row.
    pub fn from_rows<R: AsRef<[f64]>, S: AsRef<str>>(rows: &[R], names: &[S]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: r.len(),
                });
            }
            points.extend_from_slice(r);
        }
        Self::from_named(points, dim, names)
    }

    /// Builds a set from label ids into an arbitrary `label_names` list.
    ///
    /// Names are re-sorted and ids remapped, so the result is canonical.
    pub fn new(
        points: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let mut names = Vec::with_capacity(labels.len());
        for (row, &id) in labels.iter().enumerate() {
            match label_names.get(id) {
                Some(n) => names.push(n.as_str()),
                None => {
                    return Err(Error::InvalidPointSet(format!(
                        "row {row} has label id {id} but only {} names exist",
                        label_names.len()
                    )))
                }
            }
        }
        let mut set = Self::from_named(points, dim, &names)?;
        // Keep names that no row uses, so callers can share a vocabulary.
        let mut all: Vec<String> = label_names;
        all.sort();
        let before = all.len();
        all.dedup();
        if all.len() != before {
            return Err(Error::InvalidPointSet("duplicate label name".into()));
        }
        if all.len() != set.label_names.len() {
            set.labels = set
                .labels
                .iter()
                .map(|&id| all.binary_search(&set.label_names[id]).unwrap())
                .collect();
            set.label_names = all;
        }
        Ok(set)
    }

    fn validated(
        points: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptySet);
        }
        if dim == 0 {
            return Err(Error::InvalidPointSet("dimension must be at least 1".into()));
        }
        if points.len() != labels.len() * dim {
            return Err(Error::CountMismatch {
                expected: labels.len() * dim,
                found: points.len(),
            });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row: pos / dim });
        }
        if label_names.iter().any(|n| n.is_empty()) {
            return Err(Error::InvalidPointSet("empty label name".into()));
        }
        Ok(Self {
            points,
            dim,
            labels,
            label_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false for a constructed set; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    /// Row-major coordinate buffer.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn label_name(&self, id: usize) -> &str {
        &self.label_names[id]
    }

    pub fn label_id(&self, name: &str) -> Option<usize> {
        self.label_names
            .binary_search_by(|probe| probe.as_str().cmp(name))
            .ok()
    }

    /// Row indices carrying `label`, ascending.
    pub fn rows_with_label(&self, label: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == label).then_some(i))
            .collect()
    }

    /// True when both sets use the same names and assign them to the same rows.
    pub fn same_label_space(&self, other: &Self) -> bool {
        self.label_names == other.label_names && self.labels == other.labels
    }

    /// Arithmetic mean of the rows carrying `label`.
    pub fn centroid(&self, label: usize) -> Result<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut count = 0usize;
        for (row, &l) in self.rows().zip(&self.labels) {
            if l == label {
                count += 1;
                for (s, v) in sum.iter_mut().zip(row) {
                    *s += v;
                }
            }
        }
        if count == 0 {
            let name = self
                .label_names
                .get(label)
                .cloned()
                .unwrap_or_else(|| format!("#{label}"));
            return Err(Error::EmptyLabel(name));
        }
        let inv = count as f64;
        sum.iter_mut().for_each(|s| *s /= inv);
        Ok(sum)
    }

    /// One row per pair: the head row followed by the modifier row, labeled by
    /// the pair's label.
    pub fn concat_pairs(&self, pairs: &[IndexPair]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptySet);
        }
        let n = self.len();
        let mut points = Vec::with_capacity(pairs.len() * 2 * self.dim);
        for p in pairs {
            for idx in [p.head, p.modifier] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, len: n });
                }
            }
            points.extend_from_slice(self.row(p.head));
            points.extend_from_slice(self.row(p.modifier));
        }
        let names: Vec<&str> = pairs.iter().map(|p| p.label.as_str()).collect();
        Self::from_named(points, 2 * self.dim, &names)
    }

    /// Same labels, coordinates transformed row by row.
    pub fn map_rows(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Result<Self> {
        let mut points = Vec::with_capacity(self.points.len());
        let mut dim = None;
        for (i, row) in self.rows().enumerate() {
            let out = f(i, row);
            match dim {
                None => dim = Some(out.len()),
                Some(d) if d != out.len() => {
                    return Err(Error::DimensionMismatch {
                        left: d,
                        right: out.len(),
                    })
                }
                _ => {}
            }
            points.extend(out);
        }
        Self::validated(
            points,
            dim.unwrap_or(0),
            self.labels.clone(),
            self.label_names.clone(),
        )
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.map_rows(|_, r| r.iter().map(|v| v * factor).collect())
    }

    /// Every row shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: offset.len(),
            });
        }
        self.map_rows(|_, r| r.iter().zip(offset).map(|(v, t)| v + t).collect())
    }

    /// The rows at `indices`, in that order. The label vocabulary is kept.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut points = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
            points.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::validated(points, self.dim, labels, self.label_names.clone())
    }
}

/// Reads an EMBV embedding file and its labels TSV into a validated set.
///
/// 32-bit payload values are widened to `f64`; labels are remapped to
/// lexicographic id order.
pub fn load_point_set(embedding_path: &Path, labels_path: &Path) -> Result<LabeledPointSet> {
    let (header, points) = read_embv(embedding_path)?;
    let names = read_labels(labels_path, header.count)?;
    LabeledPointSet::from_named(points, header.dim, &names)
}

/// Writes `set` as an EMBV file plus labels TSV.
pub fn save_point_set(
    set: &LabeledPointSet,
    embedding_path: &Path,
    labels_path: &Path,
    meta: &std::collections::BTreeMap<String, String>,
) -> Result<()> {
    write_embv(embedding_path, set.points(), set.dim(), meta)?;
    write_labels(labels_path, set)
}
