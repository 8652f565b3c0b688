use hullprobe::probe::{
    evaluate, grid_search, read_model, train_probe, train_seeds, write_model, CellSpace, GridSpace, Mlp,
    ProbeConfig, ProbeModel,
};
use hullprobe::{Error, LabeledPointSet};
use hullprobe_testkit::{self as kit, oracle::central_difference};
use nalgebra::DMatrix;
use rand::Rng;

fn tensor_mut(m: &mut Mlp, t: usize) -> &mut [f64] {
    m.tensors_mut().into_iter().nth(t).unwrap()
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = kit::rng(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let dim = r.random_range(1..=4);
        let n_out = r.random_range(2..=4);
        let (h1, h2) = (r.random_range(2..=6), r.random_range(2..=6));
        let x = DMatrix::from_fn(5, dim, |_, _| r.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..5).map(|i| i % n_out).collect();
        let reg = 10f64.powi(r.random_range(-7..=0));
        let mut model = Mlp::init(dim, h1, h2, n_out, &mut r);
        // Nonzero biases so every tensor is exercised away from symmetry.
        for t in [1, 3, 5] {
            for v in tensor_mut(&mut model, t) {
                *v = r.random_range(-0.5..0.5);
            }
        }
        let (_, grad) = model.loss_and_grad(&x, &y, reg);
        for t in 0..6 {
            let analytic = grad.tensors()[t].to_vec();
            let params = model.tensors()[t].to_vec();
            let numeric: Vec<f64> = (0..params.len())
                .map(|i| {
                    central_difference(
                        |p| {
                            let mut m = model.clone();
                            tensor_mut(&mut m, t).copy_from_slice(p);
                            m.loss(&x, &y, reg)
                        },
                        &params,
                        i,
                        1e-5,
                    )
                })
                .collect();
            let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
            let rel = diff / na.max(nn).max(1e-12);
            worst = worst.max(rel);
            assert!(rel < 1e-4, "tensor {t}: relative error {rel:e}");
        }
    }
    eprintln!("worst tensor relative error {worst:e}");
}

#[test]
fn two_single_point_classes_are_learned() {
    let set = LabeledPointSet::from_rows(&[[0.0], [1.0]], &["a", "b"]).unwrap();
    let m = train_probe(&set, &ProbeConfig::default(), 0).unwrap();
    assert_eq!(evaluate(&m, &set).unwrap(), 1.0);
    assert!(m.loss_curve.len() <= 1000);
}

#[test]
fn separable_blobs_reach_full_train_accuracy() {
    for seed in 0..3 {
        let set = kit::blobs(4, 25, 5, 0.5, 20 + seed);
        let m = train_probe(&set, &ProbeConfig::default(), seed).unwrap();
        assert!(m.loss_curve.len() <= 1000);
        assert!(evaluate(&m, &set).unwrap() >= 0.99);
    }
}

#[test]
fn xor_is_learned_by_hidden_layers() {
    let set = kit::xor(25, 2, 0.15, 4);
    let cfg = ProbeConfig {
        hidden_sizes: (64, 64),
        reg_weight: 1e-7,
        ..Default::default()
    };
    let m = train_probe(&set, &cfg, 0).unwrap();
    assert!(evaluate(&m, &set).unwrap() >= 0.99);
}

#[test]
fn same_seed_gives_identical_loss_curves() {
    let set = kit::blobs(3, 20, 4, 0.6, 5);
    let cfg = ProbeConfig::default();
    let a = train_probe(&set, &cfg, 9).unwrap();
    let b = train_probe(&set, &cfg, 9).unwrap();
    let bits = |m: &ProbeModel| m.loss_curve.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.weights, b.weights);
    let c = train_probe(&set, &cfg, 10).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn stronger_regularization_shrinks_weights() {
    let set = LabeledPointSet::from_rows(&[[0.0], [1.0]], &["a", "b"]).unwrap();
    let norm = |reg: f64| {
        let cfg = ProbeConfig {
            reg_weight: reg,
            ..Default::default()
        };
        train_probe(&set, &cfg, 3).unwrap().weights.squared_weight_norm()
    };
    assert!(norm(1.0) < norm(1e-7));

    let set = kit::blobs(3, 15, 3, 0.5, 6);
    let norms: Vec<f64> = hullprobe::probe::default_reg_grid()
        .into_iter()
        .map(|reg| {
            let cfg = ProbeConfig {
                reg_weight: reg,
                ..Default::default()
            };
            train_probe(&set, &cfg, 3).unwrap().weights.squared_weight_norm()
        })
        .collect();
    for w in norms.windows(2) {
        assert!(w[1] <= w[0], "{norms:?}");
    }
}

#[test]
fn zero_model_predicts_first_label() {
    let set = LabeledPointSet::from_rows(&[[0.0], [1.0], [2.0], [3.0]], &["a", "b", "a", "b"]).unwrap();
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
}

#[test]
fn predictions_survive_positive_logit_scaling() {
    let set = kit::blobs(3, 10, 2, 0.8, 8);
    let m = train_probe(&set, &ProbeConfig::default(), 1).unwrap();
    let x = DMatrix::from_fn(set.len(), 2, |i, j| set.row(i)[j]);
    let before = m.weights.predict(&x);
    for c in [1e-3, 0.5, 7.0, 1e4] {
        let mut w = m.weights.clone();
        w.w3 *= c;
        w.b3 *= c;
        assert_eq!(w.predict(&x), before);
    }
}

#[test]
fn evaluate_checks_dimensions() {
    let train = kit::blobs(2, 5, 3, 0.5, 1);
    let m = train_probe(&train, &ProbeConfig::default(), 0).unwrap();
    let other = kit::blobs(2, 5, 4, 0.5, 1);
    assert!(matches!(evaluate(&m, &other), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn single_class_is_rejected() {
    let set = LabeledPointSet::from_rows(&[[0.0], [1.0]], &["a", "a"]).unwrap();
    assert!(matches!(train_probe(&set, &ProbeConfig::default(), 0), Err(Error::SingleClass)));
}

#[test]
fn seeds_summarize_with_population_std() {
    let train = kit::blobs(3, 12, 3, 0.5, 2);
    let cfg = ProbeConfig {
        seeds: 5,
        ..Default::default()
    };
    let m = train_seeds(&train, &train, &cfg, 100).unwrap();
    assert_eq!(m.per_seed_accuracies.len(), 5);
    let mean = m.per_seed_accuracies.iter().sum::<f64>() / 5.0;
    let var = m.per_seed_accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / 5.0;
    assert!((m.mean_accuracy - mean).abs() < 1e-15);
    assert!((m.std_accuracy - var.sqrt()).abs() < 1e-15);
}

#[test]
fn full_grid_on_separable_blobs_prefers_smallest_cell() {
    // Embedding-scale coordinates. At unit scale a penalty of 1·Σ‖W‖²
    // flattens the network to a constant and the λ = 1 cells fall to chance.
    let train = kit::blobs(3, 20, 4, 0.4, 12).scaled(10.0).unwrap();
    let res = grid_search(&train, &GridSpace::default(), &ProbeConfig::default(), 0).unwrap();
    assert_eq!(res.cells.len(), 128);
    for c in &res.cells {
        assert!(c.validation_accuracy >= 0.99, "{c:?}");
    }
    assert_eq!(res.best.hidden_sizes, (32, 32));
    assert_eq!(res.best.reg_weight, 1e-7);
}

#[test]
fn single_cell_grid_returns_that_cell() {
    let train = kit::blobs(2, 10, 2, 0.4, 13);
    let res = grid_search(&train, CellSpace::single(128, 64, 1e-3), &ProbeConfig::default(), 0).unwrap();
    assert_eq!(res.best.hidden_sizes, (128, 64));
    assert_eq!(res.best.reg_weight, 1e-3);
    assert_eq!(res.cells.len(), 1);
}

#[test]
fn grid_needs_ten_rows() {
    let train = kit::blobs(5, 1, 2, 0.4, 14);
    assert!(grid_search(&train, CellSpace::single(32, 32, 1e-4), &ProbeConfig::default(), 0).is_err());
}

#[test]
fn model_file_round_trips() {
    let train = kit::blobs(3, 8, 3, 0.5, 15);
    let m = train_seeds(&train, &train, &ProbeConfig { seeds: 2, ..Default::default() }, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("probe.bin");
    write_model(&path, &m).unwrap();
    let back = read_model(&path).unwrap();
    assert_eq!(back.weights, m.weights);
    assert_eq!(back.per_seed_accuracies, m.per_seed_accuracies);
    assert_eq!(back.label_names, m.label_names);
    assert_eq!(evaluate(&back, &train).unwrap(), evaluate(&m, &train).unwrap());
}
