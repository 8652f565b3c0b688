use super::DistanceVector;
use crate::error::{Error, Result};

/// Pearson correlation between two distance vectors with the same pair order.
///
/// The same measure compares two representations of one dataset, or a
/// training set with a test set under one representation (cluster each set
/// independently, then compare their vectors).
pub fn spatial_similarity(v1: &DistanceVector, v2: &DistanceVector) -> Result<f64> {
    if v1.pair_order != v2.pair_order {
        return Err(Error::PairOrderMismatch);
    }
    pearson(&v1.values, &v2.values)
}

/// Pearson's r, clamped to `[-1, 1]`. Exactly 1 for identical inputs.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::ZeroVariance);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    // sqrt(s·s) == s exactly, so r(x, x) == 1.
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
