//! Classifier probe: a two-hidden-layer ReLU network trained with Adam on
//! frozen embeddings, with grid search over layer sizes and regularization
//! and accuracy averaged over several seeds.

mod io;
mod mlp;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledPointSet;
use crate::error::{Error, Result};

pub use io::{read_model, write_model, MODEL_MAGIC};
pub use mlp::{Gradients, Mlp};

/// Allowed hidden layer widths.
pub const HIDDEN_SIZES: [usize; 4] = [32, 64, 128, 256];
pub const REG_MIN: f64 = 1e-7;
pub const REG_MAX: f64 = 1e0;

/// The default regularization grid: 8 log-uniform points from 1e-7 to 1.
pub fn default_reg_grid() -> Vec<f64> {
    (0..8).map(|i| 10f64.powi(i - 7)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub hidden_sizes: (usize, usize),
    pub reg_weight: f64,
    /// Maximum number of epochs.
    pub max_iterations: usize,
    pub seeds: usize,
    pub learning_rate: f64,
    /// `None` means `min(200, N)`.
    pub batch_size: Option<usize>,
    /// Stop once the epoch loss has not improved by `tol` for
    /// `n_iter_no_change` consecutive epochs.
    pub tol: f64,
    pub n_iter_no_change: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: (32, 32),
            reg_weight: 1e-4,
            max_iterations: 1000,
            seeds: 5,
            learning_rate: 1e-3,
            batch_size: None,
            tol: 1e-4,
            n_iter_no_change: 10,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let (h1, h2) = self.hidden_sizes;
        if !HIDDEN_SIZES.contains(&h1) || !HIDDEN_SIZES.contains(&h2) {
            return Err(Error::InvalidConfig(format!(
                "hidden sizes must come from {HIDDEN_SIZES:?}, got ({h1}, {h2})"
            )));
        }
        if !(REG_MIN..=REG_MAX).contains(&self.reg_weight) {
            return Err(Error::InvalidConfig(format!(
                "regularizer weight must lie in [1e-7, 1], got {}",
                self.reg_weight
            )));
        }
        if self.max_iterations == 0 || self.seeds == 0 || self.batch_size == Some(0) {
            return Err(Error::InvalidConfig("iteration, seed and batch counts must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }

    pub fn batch_for(&self, n: usize) -> usize {
        self.batch_size.unwrap_or(200).min(n).max(1)
    }
}

/// A trained probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub weights: Mlp,
    pub config: ProbeConfig,
    pub label_names: Vec<String>,
    /// Accuracies of the runs this model summarizes; a single-seed model
    /// holds its training accuracy.
    pub per_seed_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    /// Mean training loss after each epoch.
    pub loss_curve: Vec<f64>,
}

impl ProbeModel {
    pub fn input_dim(&self) -> usize {
        self.weights.input_dim()
    }
}

fn design_matrix(set: &LabeledPointSet, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), set.dim(), |i, j| set.row(rows[i])[j])
}

/// Trains one network with one seed.
pub fn train_probe(train: &LabeledPointSet, cfg: &ProbeConfig, seed: u64) -> Result<ProbeModel> {
    cfg.validate()?;
    let n_labels = train.n_labels();
    let present = (0..n_labels)
        .filter(|&l| train.labels().contains(&l))
        .count();
    if present < 2 {
        return Err(Error::SingleClass);
    }
    if train.len() < n_labels {
        return Err(Error::InvalidConfig(format!(
            "need at least one row per label ({} rows, {n_labels} labels)",
            train.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h1, h2) = cfg.hidden_sizes;
    let mut weights = Mlp::init(train.dim(), h1, h2, n_labels, &mut rng);
    let mut adam = mlp::Adam::new(&weights, cfg.learning_rate);
    let n = train.len();
    let batch = cfg.batch_for(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 0..cfg.max_iterations {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let x = design_matrix(train, chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| train.label(i)).collect();
            let (loss, grad) = weights.loss_and_grad(&x, &y, cfg.reg_weight);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            total += loss * chunk.len() as f64;
            adam.step(&mut weights, &grad);
        }
        let epoch_loss = total / n as f64;
        loss_curve.push(epoch_loss);
        if epoch_loss > best - cfg.tol {
            stale += 1;
        } else {
            stale = 0;
        }
        best = best.min(epoch_loss);
        if stale > cfg.n_iter_no_change {
            break;
        }
    }

    let mut model = ProbeModel {
        weights,
        config: cfg.clone(),
        label_names: train.label_names().to_vec(),
        per_seed_accuracies: Vec::new(),
        mean_accuracy: 0.0,
        std_accuracy: 0.0,
        loss_curve,
    };
    let acc = evaluate(&model, train)?;
    model.per_seed_accuracies = vec![acc];
    model.mean_accuracy = acc;
    Ok(model)
}

/// Fraction of rows of `test` whose argmax prediction matches the label.
///
/// Test labels are matched to the model by name; a test label the model has
/// never seen is an error.
pub fn evaluate(model: &ProbeModel, test: &LabeledPointSet) -> Result<f64> {
    if test.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            left: model.input_dim(),
            right: test.dim(),
        });
    }
    let mapping = test
        .label_names()
        .iter()
        .map(|name| {
            model
                .label_names
                .binary_search(name)
                .map_err(|_| Error::LabelSpaceMismatch(format!("model has no label {name:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let all: Vec<usize> = (0..test.len()).collect();
    let predicted = model.weights.predict(&design_matrix(test, &all));
    let correct = predicted
        .iter()
        .zip(test.labels())
        .filter(|(p, l)| **p == mapping[**l])
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trains `cfg.seeds` networks (seeds `base_seed..`) and scores each on
/// `test`. Returns the first seed's network with every seed's accuracy.
pub fn train_seeds(
    train: &LabeledPointSet,
    test: &LabeledPointSet,
    cfg: &ProbeConfig,
    base_seed: u64,
) -> Result<ProbeModel> {
    cfg.validate()?;
    let runs = (0..cfg.seeds as u64)
        .into_par_iter()
        .map(|s| {
            let m = train_probe(train, cfg, base_seed + s)?;
            let acc = evaluate(&m, test)?;
            Ok((m, acc))
        })
        .collect::<Result<Vec<_>>>()?;
    let accs: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (mean, std) = mean_std(&accs);
    let mut model = runs.into_iter().next().unwrap().0;
    model.per_seed_accuracies = accs;
    model.mean_accuracy = mean;
    model.std_accuracy = std;
    Ok(model)
}

/// Cells evaluated by [`grid_search`]: every `(h1, h2, λ)` combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpace {
    pub hidden_sizes: Vec<usize>,
    pub reg_weights: Vec<f64>,
}

impl Default for GridSpace {
    fn default() -> Self {
        Self {
            hidden_sizes: HIDDEN_SIZES.to_vec(),
            reg_weights: default_reg_grid(),
        }
    }
}

impl GridSpace {
    pub fn cells(&self) -> CellSpace {
        let mut out = Vec::new();
        for &h1 in &self.hidden_sizes {
            for &h2 in &self.hidden_sizes {
                for &r in &self.reg_weights {
                    out.push((h1, h2, r));
                }
            }
        }
        CellSpace(out)
    }
}

/// An explicit list of `(h1, h2, λ)` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpace(pub Vec<(usize, usize, f64)>);

impl CellSpace {
    pub fn single(h1: usize, h2: usize, reg: f64) -> Self {
        CellSpace(vec![(h1, h2, reg)])
    }
}

impl From<&GridSpace> for CellSpace {
    fn from(g: &GridSpace) -> Self {
        g.cells()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub h1: usize,
    pub h2: usize,
    pub reg_weight: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: ProbeConfig,
    pub cells: Vec<CellResult>,
}

/// Minimum training rows for [`grid_search`].
pub const GRID_MIN_ROWS: usize = 10;

/// Stratified 80/20 split: returns `(train_rows, validation_rows)`.
pub fn stratified_split(set: &LabeledPointSet, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in set.labels().iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut groups: Vec<Vec<usize>> = by_label.into_values().collect();
    for g in &mut groups {
        g.shuffle(&mut rng);
    }
    let mut takes: Vec<usize> = groups
        .iter()
        .map(|g| ((g.len() as f64 * 0.2).round() as usize).min(g.len() - 1))
        .collect();
    if takes.iter().all(|&t| t == 0) {
        if let Some((k, _)) = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.len() > 1)
            .max_by_key(|(k, g)| (g.len(), std::cmp::Reverse(*k)))
        {
            takes[k] = 1;
        }
    }
    for (g, take) in groups.iter().zip(takes) {
        val.extend_from_slice(&g[..take]);
        train.extend_from_slice(&g[take..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Picks the cell with the best validation accuracy on a held-out stratified
/// 20% of `train`. Ties go to the smaller `h1·h2`, then the smaller λ.
pub fn grid_search(
    train: &LabeledPointSet,
    space: impl Into<CellSpace>,
    base: &ProbeConfig,
    seed: u64,
) -> Result<GridResult> {
    if train.len() < GRID_MIN_ROWS {
        return Err(Error::InvalidConfig(format!(
            "grid search needs at least {GRID_MIN_ROWS} rows, got {}",
            train.len()
        )));
    }
    let cells = space.into().0;
    if cells.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    let (tr, va) = stratified_split(train, seed);
    let fit = train.subset(&tr)?;
    let val = train.subset(&va)?;

    let results = cells
        .par_iter()
        .map(|&(h1, h2, reg)| {
            let cfg = ProbeConfig {
                hidden_sizes: (h1, h2),
                reg_weight: reg,
                ..base.clone()
            };
            let model = train_probe(&fit, &cfg, seed)?;
            Ok(CellResult {
                h1,
                h2,
                reg_weight: reg,
                validation_accuracy: evaluate(&model, &val)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = results
        .iter()
        .min_by(|a, b| {
            b.validation_accuracy
                .total_cmp(&a.validation_accuracy)
                .then((a.h1 * a.h2).cmp(&(b.h1 * b.h2)))
                .then(a.reg_weight.total_cmp(&b.reg_weight))
                .then((a.h1, a.h2).cmp(&(b.h1, b.h2)))
        })
        .unwrap();
    Ok(GridResult {
        best: ProbeConfig {
            hidden_sizes: (best.h1, best.h2),
            reg_weight: best.reg_weight,
            ..base.clone()
        },
        cells: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> LabeledPointSet {
        LabeledPointSet::from_rows(&[[0.0], [1.0]], &["a", "b"]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ProbeConfig::default().validate().is_ok());
        let bad = ProbeConfig {
            hidden_sizes: (33, 32),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ProbeConfig {
            reg_weight: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(default_reg_grid().len(), 8);
        assert_eq!(default_reg_grid()[0], 1e-7);
        assert_eq!(default_reg_grid()[7], 1.0);
    }

    #[test]
    fn two_single_point_classes_fit() {
        let m = train_probe(&two_points(), &ProbeConfig::default(), 0).unwrap();
        assert_eq!(evaluate(&m, &two_points()).unwrap(), 1.0);
        assert!(m.loss_curve.len() <= 1000);
    }

    #[test]
    fn strong_regularization_shrinks_weights() {
        let weak = ProbeConfig {
            reg_weight: 1e-7,
            ..Default::default()
        };
        let strong = ProbeConfig {
            reg_weight: 1.0,
            ..Default::default()
        };
        let a = train_probe(&two_points(), &weak, 3).unwrap();
        let b = train_probe(&two_points(), &strong, 3).unwrap();
        assert!(b.weights.squared_weight_norm() < a.weights.squared_weight_norm());
    }

    #[test]
    fn single_class_rejected() {
        let set = LabeledPointSet::from_rows(&[[0.0], [1.0]], &["a", "a"]).unwrap();
        assert!(matches!(
            train_probe(&set, &ProbeConfig::default(), 0),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn zero_model_predicts_label_zero() {
        let set = LabeledPointSet::from_rows(&[[0.0], [1.0], [2.0], [3.0]], &["a", "b", "a", "b"])
            .unwrap();
        let model = ProbeModel {
            weights: Mlp::zeros(1, 32, 32, 2),
            config: ProbeConfig::default(),
            label_names: set.label_names().to_vec(),
            per_seed_accuracies: vec![],
            mean_accuracy: 0.0,
            std_accuracy: 0.0,
            loss_curve: vec![],
        };
        assert_eq!(evaluate(&model, &set).unwrap(), 0.5);
        let other = LabeledPointSet::from_rows(&[[0.0, 1.0]], &["a"]).unwrap();
        assert!(matches!(evaluate(&model, &other), Err(Error::DimensionMismatch { .. })));
        let unknown = LabeledPointSet::from_rows(&[[0.0]], &["c"]).unwrap();
        assert!(matches!(evaluate(&model, &unknown), Err(Error::LabelSpaceMismatch(_))));
    }

    #[test]
    fn grid_needs_ten_rows() {
        let set = LabeledPointSet::from_rows(
            &[[0.0], [1.0], [2.0], [3.0], [4.0]],
            &["a", "b", "a", "b", "a"],
        )
        .unwrap();
        assert!(matches!(
            grid_search(&set, &GridSpace::default(), &ProbeConfig::default(), 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn split_is_stratified() {
        let names: Vec<&str> = (0..20).map(|i| if i % 4 == 0 { "a" } else { "b" }).collect();
        let rows: Vec<[f64; 1]> = (0..20).map(|i| [i as f64]).collect();
        let set = LabeledPointSet::from_rows(&rows, &names).unwrap();
        let (tr, va) = stratified_split(&set, 1);
        assert_eq!(tr.len() + va.len(), 20);
        assert_eq!(va.len(), 4);
        assert_eq!(va.iter().filter(|&&i| set.label(i) == 0).count(), 1);
        assert_eq!(stratified_split(&set, 1), (tr, va));
    }

    #[test]
    fn mean_std_population() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }
}
