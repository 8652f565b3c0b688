use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Mlp, ProbeConfig, ProbeModel};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "PROBEV1";

/// JSON header line of a model file. The payload that follows is W1, b1, W2,
/// b2, W3, b3 as row-major little-endian `f64`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    magic: String,
    input_dim: usize,
    hidden_sizes: (usize, usize),
    n_labels: usize,
    label_names: Vec<String>,
    config: ProbeConfig,
    per_seed_accuracies: Vec<f64>,
    mean_accuracy: f64,
    std_accuracy: f64,
    epochs: usize,
    dtype: String,
}

fn push_matrix(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
}

fn push_vector(out: &mut Vec<u8>, v: &DVector<f64>) {
    for x in v.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_model(model: &ProbeModel) -> Result<Vec<u8>> {
    let w = &model.weights;
    let header = Header {
        magic: MODEL_MAGIC.into(),
        input_dim: w.input_dim(),
        hidden_sizes: w.hidden(),
        n_labels: w.n_outputs(),
        label_names: model.label_names.clone(),
        config: model.config.clone(),
        per_seed_accuracies: model.per_seed_accuracies.clone(),
        mean_accuracy: model.mean_accuracy,
        std_accuracy: model.std_accuracy,
        epochs: model.loss_curve.len(),
        dtype: "f64le".into(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    push_matrix(&mut out, &w.w1);
    push_vector(&mut out, &w.b1);
    push_matrix(&mut out, &w.w2);
    push_vector(&mut out, &w.b2);
    push_matrix(&mut out, &w.w3);
    push_vector(&mut out, &w.b3);
    Ok(out)
}

pub fn write_model(path: &Path, model: &ProbeModel) -> Result<()> {
    fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<ProbeModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

pub fn decode_model(bytes: &[u8]) -> Result<ProbeModel> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Header("missing header terminator".into()))?;
    let h: Header = serde_json::from_slice(&bytes[..nl])?;
    if h.magic != MODEL_MAGIC {
        return Err(Error::MagicMismatch { found: h.magic });
    }
    let (h1, h2) = h.hidden_sizes;
    let mut values = bytes[nl + 1..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let expected = h1 * h.input_dim + h1 + h2 * h1 + h2 + h.n_labels * h2 + h.n_labels;
    if bytes.len() - nl - 1 != expected * 8 {
        return Err(Error::Header(format!(
            "model payload has {} bytes, expected {}",
            bytes.len() - nl - 1,
            expected * 8
        )));
    }
    let mut matrix = |r: usize, c: usize| DMatrix::from_row_iterator(r, c, values.by_ref().take(r * c));
    let w1 = matrix(h1, h.input_dim);
    let b1 = DVector::from_iterator(h1, (&mut values).take(h1));
    let w2 = DMatrix::from_row_iterator(h2, h1, (&mut values).take(h2 * h1));
    let b2 = DVector::from_iterator(h2, (&mut values).take(h2));
    let w3 = DMatrix::from_row_iterator(h.n_labels, h2, (&mut values).take(h.n_labels * h2));
    let b3 = DVector::from_iterator(h.n_labels, (&mut values).take(h.n_labels));
    Ok(ProbeModel {
        weights: Mlp {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
        },
        config: h.config,
        label_names: h.label_names,
        per_seed_accuracies: h.per_seed_accuracies,
        mean_accuracy: h.mean_accuracy,
        std_accuracy: h.std_accuracy,
        loss_curve: Vec::new(),
    })
}
