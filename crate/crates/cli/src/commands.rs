use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use hullprobe::analytics::{
    centroid_paths, cross_task_report, difference_vectors, distance_matrix, distance_vector, pca_project,
    spatial_similarity, track_series, ClusterDistanceMatrix, TrackReport,
};
use hullprobe::probe::{grid_search, train_seeds, write_model, CellResult, CellSpace, ProbeConfig};
use hullprobe::{cluster, load_point_set, load_series, ClusterSet, Error, LabeledPointSet};
use log::info;
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::svg::{self, Series};

fn load(embv: &Path, labels: &Path) -> Result<LabeledPointSet> {
    load_point_set(embv, labels).with_context(|| format!("loading {} with {}", embv.display(), labels.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(run: &RunConfig, name: &str, value: &T) -> Result<()> {
    let path = run.out.join(name);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_with(run: &RunConfig, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let path = run.out.join(name);
    let mut w = create(&path)?;
    f(&mut w)?;
    w.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_text(run: &RunConfig, name: &str, text: &str) -> Result<()> {
    write_with(run, name, |w| Ok(w.write_all(text.as_bytes())?))
}

pub fn prepare(run: &RunConfig) -> Result<()> {
    fs::create_dir_all(&run.out).with_context(|| format!("creating output directory {}", run.out.display()))
}

fn cluster_set(set: LabeledPointSet, run: &RunConfig) -> Result<ClusterSet> {
    let n = set.len();
    let cs = cluster(set, &run.separability)?;
    info!("{n} rows -> {} clusters", cs.count());
    Ok(cs)
}

pub fn cluster_cmd(run: &RunConfig, embv: &Path, labels: &Path) -> Result<()> {
    let cs = cluster_set(load(embv, labels)?, run)?;
    let summary = json!({
        "count": cs.count(),
        "n_labels": cs.n_labels(),
        "is_linear": cs.is_linear(),
        "verified": cs.verified(),
    });
    if run.wants(Format::Json) {
        write_json(run, "clusters.json", &cs.to_json())?;
        write_json(run, "summary.json", &summary)?;
    }
    if run.wants(Format::Csv) {
        write_with(run, "clusters.csv", |w| {
            writeln!(w, "row,label,cluster")?;
            let mut of_row = vec![0; cs.source().len()];
            for (k, c) in cs.clusters().iter().enumerate() {
                for &m in &c.members {
                    of_row[m] = k;
                }
            }
            for (row, k) in of_row.iter().enumerate() {
                let label = cs.source().label_name(cs.source().label(row));
                writeln!(w, "{row},{},{k}", csv_field(label))?;
            }
            Ok(())
        })?;
    }
    println!("clusters: {}  labels: {}  linear: {}", cs.count(), cs.n_labels(), cs.is_linear());
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn matrix_csv(m: &ClusterDistanceMatrix, w: &mut impl Write) -> Result<()> {
    let head: Vec<String> = m.names.iter().map(|n| csv_field(n)).collect();
    writeln!(w, "cluster,{}", head.join(","))?;
    for (i, name) in head.iter().enumerate() {
        let row: Vec<String> = (0..m.size()).map(|j| m.get(i, j).to_string()).collect();
        writeln!(w, "{name},{}", row.join(","))?;
    }
    Ok(())
}

pub fn distances_cmd(run: &RunConfig, embv: &Path, labels: &Path) -> Result<()> {
    let cs = cluster_set(load(embv, labels)?, run)?;
    let matrix = distance_matrix(&cs)?;
    let vector = match distance_vector(&cs) {
        Ok(v) => Ok(v),
        Err(e @ Error::NotLinear { .. }) => Err(e.to_string()),
        Err(e) => return Err(e.into()),
    };
    let min = match &vector {
        Ok(v) if cs.n_labels() >= 2 => Some(v.min_per_label(cs.source().label_names())?),
        _ => None,
    };

    if run.wants(Format::Csv) {
        write_with(run, "distance_matrix.csv", |w| matrix_csv(&matrix, w))?;
        if let Some(min) = &min {
            write_with(run, "min_distances.csv", |w| {
                writeln!(w, "label,min_distance")?;
                for (label, d) in min {
                    writeln!(w, "{},{d}", csv_field(label))?;
                }
                Ok(())
            })?;
        }
    }
    if run.wants(Format::Json) {
        write_json(run, "distance_matrix.json", &matrix)?;
        let body = match &vector {
            Ok(v) => json!({
                "available": true,
                "pair_order": v.pair_order,
                "values": v.values,
                "min_distances": min,
            }),
            Err(note) => json!({ "available": false, "note": note }),
        };
        write_json(run, "distance_vector.json", &body)?;
    }
    match &vector {
        Ok(v) => println!("distance vector: {} entries", v.len()),
        Err(note) => println!("distance vector omitted: {note}"),
    }
    Ok(())
}

pub fn similarity_cmd(run: &RunConfig, a: (&Path, &Path), b: (&Path, &Path)) -> Result<()> {
    let ca = cluster_set(load(a.0, a.1)?, run)?;
    let cb = cluster_set(load(b.0, b.1)?, run)?;
    let va = distance_vector(&ca).context("first representation")?;
    let vb = distance_vector(&cb).context("second representation")?;
    let r = spatial_similarity(&va, &vb)?;
    if run.wants(Format::Json) {
        write_json(
            run,
            "similarity.json",
            &json!({
                "similarity": r,
                "pairs": va.len(),
                "pair_order": va.pair_order,
                "a": va.values,
                "b": vb.values,
            }),
        )?;
    }
    println!("similarity: {r}");
    Ok(())
}

/// Labels to plot: the `k` largest increases then the `k` largest decreases.
fn plotted_labels(report: &TrackReport, k: usize) -> Vec<(String, bool)> {
    let ranked = report.labels_by_increase();
    if ranked.is_empty() {
        return report.label_names.iter().map(|l| (l.clone(), false)).collect();
    }
    let top = k.min(ranked.len());
    let bottom = k.min(ranked.len() - top);
    let mut out: Vec<(String, bool)> = ranked[..top].iter().map(|(l, _)| (l.clone(), false)).collect();
    out.extend(ranked[ranked.len() - bottom..].iter().rev().map(|(l, _)| (l.clone(), true)));
    out
}

type Paths2d = BTreeMap<String, Vec<(f64, f64)>>;

/// Centroid paths of `labels` projected jointly onto two principal axes,
/// with the explained-variance ratios of those axes.
fn projected_paths(paths: &BTreeMap<String, Vec<Vec<f64>>>, labels: &[String]) -> Result<(Paths2d, Vec<f64>)> {
    let vectors: Vec<Vec<f64>> = labels.iter().flat_map(|l| paths[l].iter().cloned()).collect();
    let dim = vectors.first().map_or(0, Vec::len);
    let k = 2.min(dim).min(vectors.len());
    let (coords, ratio): (Vec<(f64, f64)>, Vec<f64>) = match pca_project(&vectors, k) {
        Ok(p) => (
            p.projected.iter().map(|v| (v[0], v.get(1).copied().unwrap_or(0.0))).collect(),
            p.explained_variance_ratio,
        ),
        // A single point or a motionless series: nothing to project.
        Err(Error::DegenerateInput(_)) => (vec![(0.0, 0.0); vectors.len()], Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = BTreeMap::new();
    let mut it = coords.into_iter();
    for l in labels {
        out.insert(l.clone(), it.by_ref().take(paths[l].len()).collect());
    }
    Ok((out, ratio))
}

pub fn track_cmd(run: &RunConfig, dir: &Path) -> Result<()> {
    let series = load_series(dir, run.layer).with_context(|| format!("loading series {}", dir.display()))?;
    info!("{} snapshots", series.len());
    let report = track_series(&series, &run.separability)?;
    let paths = centroid_paths(&series)?;
    let first = series.first();
    let last = &series.steps()[series.len() - 1].set;
    let diffs = difference_vectors(first, last)?;
    let plotted = plotted_labels(&report, run.top_k);
    let names: Vec<String> = plotted.iter().map(|(l, _)| l.clone()).collect();
    let (paths2d, ratio) = projected_paths(&paths, &names)?;

    if run.wants(Format::Json) {
        write_json(
            run,
            "track.json",
            &json!({
                "report": report,
                "labels_by_increase": report.labels_by_increase(),
                "difference_vectors": diffs,
                "centroid_paths_2d": paths2d,
                "pca_explained_variance_ratio": ratio,
            }),
        )?;
    }
    if run.wants(Format::Csv) {
        write_with(run, "track_steps.csv", |w| Ok(report.write_steps_csv(w)?))?;
        write_with(run, "track_min_distances.csv", |w| Ok(report.write_min_distances_csv(w)?))?;
    }
    if run.wants(Format::Svg) {
        let axis = match report.axis {
            hullprobe::SeriesAxis::FineTuningSteps => "step",
            hullprobe::SeriesAxis::Layers => "layer",
        };
        let lines: Vec<Series> = plotted
            .iter()
            .map(|(label, dashed)| Series {
                name: label.clone(),
                points: report
                    .steps
                    .iter()
                    .filter_map(|s| s.min_distances.as_ref().map(|m| (s.index as f64, m[label])))
                    .collect(),
                dashed: *dashed,
            })
            .collect();
        write_text(run, "min_distances.svg", &svg::line_chart("Minimum distance per label", axis, "min distance", &lines))?;
        let sim = [Series::new(
            "similarity",
            report
                .steps
                .iter()
                .filter_map(|s| s.similarity_to_origin.map(|v| (s.index as f64, v)))
                .collect(),
        )];
        write_text(run, "similarity.svg", &svg::line_chart("Similarity to first snapshot", axis, "r", &sim))?;
        let traj: Vec<Series> = names.iter().map(|l| Series::new(l.clone(), paths2d[l].clone())).collect();
        write_text(run, "centroid_paths.svg", &svg::path_chart("Centroid paths", "PC1", "PC2", &traj))?;
    }
    let linear = report.steps.iter().filter(|s| s.is_linear).count();
    println!("snapshots: {}  linear: {linear}", report.steps.len());
    Ok(())
}

pub fn crosstask_cmd(run: &RunConfig, baseline: (&Path, &Path), tuned: (&Path, &Path)) -> Result<()> {
    let b = cluster_set(load(baseline.0, baseline.1)?, run)?;
    let t = cluster_set(load(tuned.0, tuned.1)?, run)?;
    let report = cross_task_report(&b, &t)?;
    if run.wants(Format::Json) {
        write_json(run, "crosstask.json", &report)?;
    }
    if run.wants(Format::Csv) {
        write_with(run, "crosstask_summary.csv", |w| Ok(report.write_summary_csv(w)?))?;
        write_with(run, "crosstask_labels.csv", |w| Ok(report.write_labels_csv(w)?))?;
    }
    println!(
        "increased: {}  decreased: {}  average change: {}",
        report.num_increased, report.num_decreased, report.average_change
    );
    Ok(())
}

#[derive(Serialize)]
struct ProbeReport<'a> {
    hidden_sizes: (usize, usize),
    reg_weight: f64,
    config: &'a ProbeConfig,
    label_names: &'a [String],
    per_seed_accuracies: &'a [f64],
    mean_accuracy: f64,
    std_accuracy: f64,
}

pub fn probe_cmd(run: &RunConfig, train: (&Path, &Path), test: (&Path, &Path)) -> Result<()> {
    let train = load(train.0, train.1)?;
    let test = load(test.0, test.1)?;
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            left: train.dim(),
            right: test.dim(),
        })
        .context("train and test embeddings");
    }
    let cells = run.grid.cells();
    let (best, searched): (ProbeConfig, Vec<CellResult>) = if cells.0.len() == 1 {
        let (h1, h2, reg) = cells.0[0];
        let cfg = ProbeConfig {
            hidden_sizes: (h1, h2),
            reg_weight: reg,
            ..run.probe.clone()
        };
        (cfg, Vec::new())
    } else {
        info!("searching {} cells", cells.0.len());
        let g = grid_search(&train, CellSpace::from(&run.grid), &run.probe, run.seed)?;
        (g.best, g.cells)
    };
    let model = train_seeds(&train, &test, &best, run.seed)?;

    if run.wants(Format::Json) {
        write_json(run, "grid.json", &json!({ "best": best, "cells": searched }))?;
        write_json(
            run,
            "probe_report.json",
            &ProbeReport {
                hidden_sizes: best.hidden_sizes,
                reg_weight: best.reg_weight,
                config: &best,
                label_names: &model.label_names,
                per_seed_accuracies: &model.per_seed_accuracies,
                mean_accuracy: model.mean_accuracy,
                std_accuracy: model.std_accuracy,
            },
        )?;
    }
    if run.wants(Format::Csv) && !searched.is_empty() {
        write_with(run, "grid.csv", |w| {
            writeln!(w, "h1,h2,reg_weight,validation_accuracy")?;
            for c in &searched {
                writeln!(w, "{},{},{},{}", c.h1, c.h2, c.reg_weight, c.validation_accuracy)?;
            }
            Ok(())
        })?;
    }
    let path = run.out.join("probe.model");
    write_model(&path, &model)?;
    info!("wrote {}", path.display());
    println!(
        "hidden: {:?}  reg: {}  accuracy: {:.4} ± {:.4}",
        best.hidden_sizes, best.reg_weight, model.mean_accuracy, model.std_accuracy
    );
    Ok(())
}
