//! Shared test support: reference oracles, synthetic datasets, and on-disk
//! fixtures in the EMBV/TSV layout.

pub mod oracle;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hullprobe::dataset::{save_point_set, LabeledPointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-padded label name so lexicographic and numeric order agree.
pub fn label_name(i: usize) -> String {
    format!("L{i:02}")
}

/// Uniform sample from the ball of radius `r` around the origin.
pub fn in_ball<R: Rng>(rng: &mut R, dim: usize, r: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let rad = r * rng.random::<f64>().powf(1.0 / dim as f64);
    dir.iter().map(|x| x / n * rad).collect()
}

/// Uniform points in an axis-aligned box.
pub fn in_box<R: Rng>(rng: &mut R, count: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(lo..hi)).collect())
        .collect()
}

/// Centers at pairwise distance at least `min_gap`, drawn from a box.
pub fn spread_centers<R: Rng>(rng: &mut R, n: usize, dim: usize, min_gap: f64) -> Vec<Vec<f64>> {
    let side = min_gap * (n as f64).max(2.0) * 2.0;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    while out.len() < n {
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-side..side)).collect();
        let ok = out.iter().all(|o| {
            o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= min_gap
        });
        if ok {
            out.push(c);
        }
    }
    out
}

/// Blobs of radius `radius` around well-spread centers, one label each.
///
/// Centers are at least `4·radius` apart, so every pair of label hulls sits
/// inside disjoint balls and the data is linearly separable by label.
pub fn blobs(n_labels: usize, per_label: usize, dim: usize, radius: f64, seed: u64) -> LabeledPointSet {
    let mut r = rng(seed);
    let centers = spread_centers(&mut r, n_labels, dim, 4.0 * radius.max(0.25));
    blobs_at(&centers, per_label, radius, &mut r)
}

/// Blobs around the given centers; label `i` goes with `centers[i]`.
pub fn blobs_at<R: Rng>(centers: &[Vec<f64>], per_label: usize, radius: f64, rng: &mut R) -> LabeledPointSet {
    let dim = centers[0].len();
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for (i, c) in centers.iter().enumerate() {
        for _ in 0..per_label {
            let off = in_ball(rng, dim, radius);
            rows.push(c.iter().zip(&off).map(|(a, b)| a + b).collect::<Vec<f64>>());
            names.push(label_name(i));
        }
    }
    LabeledPointSet::from_rows(&rows, &names).expect("generated set is valid")
}

/// XOR layout: label "X" at (0,0) and (1,1), label "O" at (0,1) and (1,0),
/// each corner a small blob. Extra dimensions are zero.
pub fn xor(per_blob: usize, dim: usize, radius: f64, seed: u64) -> LabeledPointSet {
    assert!(dim >= 2);
    let mut r = rng(seed);
    let corners = [([0.0, 0.0], "X"), ([1.0, 1.0], "X"), ([0.0, 1.0], "O"), ([1.0, 0.0], "O")];
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for (c, name) in corners {
        for _ in 0..per_blob {
            let off = in_ball(&mut r, 2, radius);
            let mut p = vec![0.0; dim];
            p[0] = c[0] + off[0];
            p[1] = c[1] + off[1];
            rows.push(p);
            names.push(name);
        }
    }
    LabeledPointSet::from_rows(&rows, &names).expect("generated set is valid")
}

/// Points along the first axis in runs of `run` points, cycling through
/// `n_labels` labels, with optional jitter in the remaining dimensions.
pub fn chain(runs: usize, run: usize, n_labels: usize, dim: usize, jitter: f64, seed: u64) -> LabeledPointSet {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for k in 0..runs {
        for j in 0..run {
            let mut p = vec![0.0; dim];
            p[0] = k as f64 * 2.0 + j as f64 * (1.0 / run as f64);
            for x in p.iter_mut().skip(1) {
                *x = if jitter > 0.0 { r.random_range(-jitter..jitter) } else { 0.0 };
            }
            rows.push(p);
            names.push(label_name(k % n_labels));
        }
    }
    LabeledPointSet::from_rows(&rows, &names).expect("generated set is valid")
}

/// Moves every point by `amount` times its label's centroid.
///
/// Each label keeps its shape and its centroid scales by `1 + amount`, so
/// every pairwise hull distance is nondecreasing in `amount`.
pub fn radial_push(base: &LabeledPointSet, amount: f64) -> LabeledPointSet {
    let centroids: Vec<Vec<f64>> = (0..base.n_labels())
        .map(|l| base.centroid(l).expect("every label has rows"))
        .collect();
    base.map_rows(|i, row| {
        let c = &centroids[base.label(i)];
        row.iter().zip(c).map(|(x, c)| x + amount * c).collect()
    })
    .expect("finite")
}

/// `steps` sets where step `k` is `radial_push(base, k·rate)`.
pub fn radial_series(base: &LabeledPointSet, steps: usize, rate: f64) -> Vec<LabeledPointSet> {
    (0..steps).map(|k| radial_push(base, k as f64 * rate)).collect()
}

/// `steps` sets where step `k` is `base` scaled by `1 + k`.
pub fn scaling_series(base: &LabeledPointSet, steps: usize) -> Vec<LabeledPointSet> {
    (0..steps)
        .map(|k| base.scaled(1.0 + k as f64).expect("finite"))
        .collect()
}

/// Rows of `set` with the given label id.
pub fn rows_of(set: &LabeledPointSet, label: usize) -> Vec<Vec<f64>> {
    set.rows_with_label(label)
        .into_iter()
        .map(|i| set.row(i).to_vec())
        .collect()
}

/// Writes `set` as `<dir>/<stem>.embv` and `<dir>/<stem>.tsv`.
pub fn write_fixture(dir: &Path, stem: &str, set: &LabeledPointSet) -> (PathBuf, PathBuf) {
    fs::create_dir_all(dir).unwrap();
    let embv = dir.join(format!("{stem}.embv"));
    let tsv = dir.join(format!("{stem}.tsv"));
    save_point_set(set, &embv, &tsv, &BTreeMap::new()).unwrap();
    (embv, tsv)
}

/// Writes a run directory `<dir>/step-<k>/layer-<layer>.embv` with a shared
/// `<dir>/labels.tsv`. Step indices are `k·stride`.
pub fn write_run(dir: &Path, sets: &[LabeledPointSet], stride: u64, layer: u64) {
    fs::create_dir_all(dir).unwrap();
    for (k, set) in sets.iter().enumerate() {
        let step = dir.join(format!("step-{}", k as u64 * stride));
        fs::create_dir_all(&step).unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("step".to_string(), (k as u64 * stride).to_string());
        meta.insert("layer".to_string(), layer.to_string());
        let scratch = step.join("labels.tmp");
        save_point_set(set, &step.join(format!("layer-{layer}.embv")), &scratch, &meta).unwrap();
        if k == 0 {
            fs::rename(&scratch, dir.join("labels.tsv")).unwrap();
        } else {
            fs::remove_file(&scratch).unwrap();
        }
    }
}
