use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EMBV_MAGIC: &str = "EMBV1";
pub const EMBV_DTYPE: &str = "f32le";

/// The JSON header line of an EMBV file.
///
/// Exactly `count * dim * 4` bytes of little-endian `f32` follow the
/// terminating newline, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingHeader {
    pub magic: String,
    pub count: usize,
    pub dim: usize,
    pub dtype: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl EmbeddingHeader {
    pub fn new(count: usize, dim: usize, meta: BTreeMap<String, String>) -> Self {
        Self {
            magic: EMBV_MAGIC.to_string(),
            count,
            dim,
            dtype: EMBV_DTYPE.to_string(),
            meta,
        }
    }

    pub fn payload_len(&self) -> usize {
        self.count * self.dim * 4
    }
}

/// Decodes an EMBV file, widening the payload to `f64`.
pub fn read_embv(path: &Path) -> Result<(EmbeddingHeader, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<(EmbeddingHeader, Vec<f64>)> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Header("missing header terminator".into()))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| Error::Header(format!("header is not a JSON object: {e}")))?;
    match value.get("magic").and_then(|m| m.as_str()) {
        Some(EMBV_MAGIC) => {}
        Some(other) => {
            return Err(Error::MagicMismatch {
                found: other.to_string(),
            })
        }
        None => {
            return Err(Error::MagicMismatch {
                found: String::new(),
            })
        }
    }
    let header: EmbeddingHeader =
        serde_json::from_value(value).map_err(|e| Error::Header(e.to_string()))?;
    if header.dtype != EMBV_DTYPE {
        return Err(Error::Header(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.count == 0 || header.dim == 0 {
        return Err(Error::Header("count and dim must be positive".into()));
    }
    let payload = &bytes[newline + 1..];
    if payload.len() != header.payload_len() {
        return Err(Error::Header(format!(
            "payload has {} bytes, header requires {}",
            payload.len(),
            header.payload_len()
        )));
    }
    let mut points = Vec::with_capacity(header.count * header.dim);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { row: i / header.dim });
        }
        points.push(f64::from(v));
    }
    Ok((header, points))
}

/// Writes row-major `points` as an EMBV file, narrowing to `f32`.
pub fn write_embv(
    path: &Path,
    points: &[f64],
    dim: usize,
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    let bytes = encode(points, dim, meta)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode(points: &[f64], dim: usize, meta: &BTreeMap<String, String>) -> Result<Vec<u8>> {
    if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
        return Err(Error::InvalidPointSet(format!(
            "{} values do not form rows of width {dim}",
            points.len()
        )));
    }
    let header = EmbeddingHeader::new(points.len() / dim, dim, meta.clone());
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.reserve(header.payload_len());
    for (i, &v) in points.iter().enumerate() {
        let narrowed = v as f32;
        if !narrowed.is_finite() {
            return Err(Error::NonFiniteValue { row: i / dim });
        }
        out.extend_from_slice(&narrowed.to_le_bytes());
    }
    Ok(out)
}
