//! Distance between convex hulls, the induced max-margin hyperplane and the
//! separability predicate.
//!
//! The nearest points `p ∈ conv(A)`, `q ∈ conv(B)` are found as the minimum
//! norm point of the Minkowski difference `conv(A) − conv(B)` with Wolfe's
//! method: Frank–Wolfe major steps add the vertex `a_i − b_j` minimizing
//! `<·, z>`, and fully corrective minor cycles re-solve over the affine hull
//! of the active vertices. Only inner products are needed, and each major
//! step yields a certified bracket on the true distance: the iterate gives
//! the upper bound `‖z‖` and the linear oracle gives the lower bound
//! `(‖z‖² − gap) / ‖z‖`.
//!
//! Inputs are centered on the mean of `A ∪ B` and the pair is put in a
//! canonical order before solving, so the result is exactly symmetric and
//! insensitive to translations.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances for hull-distance computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityConfig {
    /// Hulls closer than this are treated as overlapping.
    pub epsilon: f64,
    /// Relative duality-gap stopping tolerance.
    pub gap_tol: f64,
    /// Iteration cap; `None` means `max(100·(|A|+|B|), 10000)`.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    /// Interpret `epsilon` as a multiple of the mean point norm.
    #[serde(default)]
    pub relative_eps: bool,
}

impl Default for SeparabilityConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            gap_tol: 1e-8,
            max_iterations: None,
            relative_eps: false,
        }
    }
}

impl SeparabilityConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.epsilon) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !ok(self.gap_tol) {
            return Err(Error::InvalidConfig(format!("gap_tol must be positive, got {}", self.gap_tol)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, total_points: usize) -> usize {
        self.max_iterations
            .unwrap_or_else(|| (100 * total_points).max(10_000))
    }

    /// Returns an absolute-epsilon config for data whose rows are `rows`.
    ///
    /// With `relative_eps` set, epsilon is multiplied by the mean row norm.
    pub fn resolved<'r, I>(&self, rows: I) -> Self
    where
        I: IntoIterator<Item = &'r [f64]>,
    {
        if !self.relative_eps {
            return *self;
        }
        let (sum, count) = rows
            .into_iter()
            .fold((0.0, 0usize), |(s, c), r| (s + norm(r), c + 1));
        let mean = if count == 0 { 0.0 } else { sum / count as f64 };
        Self {
            epsilon: self.epsilon * mean.max(f64::MIN_POSITIVE),
            relative_eps: false,
            ..*self
        }
    }
}

/// Nearest points between two hulls.
#[derive(Debug, Clone, PartialEq)]
pub struct HullDistance {
    pub distance: f64,
    pub witness_a: Vec<f64>,
    pub witness_b: Vec<f64>,
    /// Certified lower bound on the true distance.
    pub lower_bound: f64,
    /// Final Frank–Wolfe duality gap on `½‖p − q‖²`.
    pub gap: f64,
    pub iterations: usize,
}

/// A unit-normal hyperplane `normal·x + offset = 0`. Points of the first set
/// lie on the positive side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub margin: f64,
}

impl Hyperplane {
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) + self.offset
    }
}

/// Minimum Euclidean distance between `conv(a)` and `conv(b)`.
pub fn hull_distance<P: AsRef<[f64]>>(a: &[P], b: &[P], cfg: &SeparabilityConfig) -> Result<HullDistance> {
    cfg.validate()?;
    solve_canonical(a, b, cfg, Mode::Exact)
}

/// True iff the hull distance exceeds epsilon.
///
/// Stops as soon as the certified bracket lies entirely on one side of
/// epsilon, so this is usually much cheaper than [`hull_distance`].
pub fn is_separable<P: AsRef<[f64]>>(a: &[P], b: &[P], cfg: &SeparabilityConfig) -> Result<bool> {
    cfg.validate()?;
    let cfg = resolve_pair(a, b, cfg);
    let sol = solve_canonical(a, b, &cfg, Mode::Decide(cfg.epsilon))?;
    Ok(decided(&sol, cfg.epsilon))
}

/// The hard-margin separator of two separable point sets.
///
/// The normal points from the witness in `b` to the witness in `a`, the plane
/// bisects the witness segment and the margin is half the hull distance.
pub fn max_margin_separator<P: AsRef<[f64]>>(
    a: &[P],
    b: &[P],
    cfg: &SeparabilityConfig,
) -> Result<Hyperplane> {
    cfg.validate()?;
    let cfg = resolve_pair(a, b, cfg);
    let sol = solve_canonical(a, b, &cfg, Mode::Exact)?;
    if sol.distance <= cfg.epsilon {
        return Err(Error::NotSeparable {
            distance: sol.distance,
        });
    }
    let normal: Vec<f64> = sol
        .witness_a
        .iter()
        .zip(&sol.witness_b)
        .map(|(p, q)| (p - q) / sol.distance)
        .collect();
    let mid: Vec<f64> = sol
        .witness_a
        .iter()
        .zip(&sol.witness_b)
        .map(|(p, q)| 0.5 * (p + q))
        .collect();
    Ok(Hyperplane {
        offset: -dot(&normal, &mid),
        normal,
        margin: 0.5 * sol.distance,
    })
}

fn resolve_pair<P: AsRef<[f64]>>(a: &[P], b: &[P], cfg: &SeparabilityConfig) -> SeparabilityConfig {
    cfg.resolved(a.iter().chain(b).map(AsRef::as_ref))
}

pub(crate) fn decided(sol: &HullDistance, epsilon: f64) -> bool {
    if sol.lower_bound > epsilon {
        true
    } else {
        sol.distance > epsilon
    }
}

/// Whether the solver may stop once the bracket clears a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Mode {
    Exact,
    Decide(f64),
}

pub(crate) fn solve_canonical<P: AsRef<[f64]>>(
    a: &[P],
    b: &[P],
    cfg: &SeparabilityConfig,
    mode: Mode,
) -> Result<HullDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = a[0].as_ref().len();
    for r in a.iter().chain(b) {
        if r.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: r.as_ref().len(),
            });
        }
    }
    if dim == 0 {
        return Err(Error::InvalidPointSet("zero-dimensional points".into()));
    }
    if compare_sets(a, b) == Ordering::Greater {
        let mut sol = solve(b, a, dim, cfg, mode)?;
        std::mem::swap(&mut sol.witness_a, &mut sol.witness_b);
        Ok(sol)
    } else {
        solve(a, b, dim, cfg, mode)
    }
}

fn compare_sets<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .flat_map(|r| r.as_ref().iter())
            .zip(b.iter().flat_map(|r| r.as_ref().iter()))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// One side of the problem: centered rows and their inner products with the
/// current difference vector.
struct Side {
    rows: Vec<f64>,
    proj: Vec<f64>,
    dim: usize,
}

impl Side {
    fn new<P: AsRef<[f64]>>(src: &[P], center: &[f64]) -> Self {
        let dim = center.len();
        let mut rows = Vec::with_capacity(src.len() * dim);
        for r in src {
            rows.extend(r.as_ref().iter().zip(center).map(|(v, c)| v - c));
        }
        Self {
            rows,
            proj: vec![0.0; src.len()],
            dim,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    fn project(&mut self, z: &[f64]) {
        for (i, out) in self.proj.iter_mut().enumerate() {
            *out = dot(&self.rows[i * self.dim..(i + 1) * self.dim], z);
        }
    }

    fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows.chunks_exact(self.dim) {
            for (a, v) in m.iter_mut().zip(r) {
                *a += v;
            }
        }
        let n = self.proj.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }
}

/// Affinely independent difference vertices `a_i − b_j` with convex weights
/// and their Gram matrix.
struct Corral {
    pairs: Vec<(usize, usize)>,
    verts: Vec<Vec<f64>>,
    weights: Vec<f64>,
    gram: Vec<Vec<f64>>,
}

impl Corral {
    fn new() -> Self {
        Self {
            pairs: Vec::new(),
            verts: Vec::new(),
            weights: Vec::new(),
            gram: Vec::new(),
        }
    }

    fn push(&mut self, pair: (usize, usize), v: Vec<f64>, weight: f64) {
        let row: Vec<f64> = self.verts.iter().map(|u| dot(u, &v)).chain([dot(&v, &v)]).collect();
        for (g, &x) in self.gram.iter_mut().zip(&row) {
            g.push(x);
        }
        self.gram.push(row);
        self.pairs.push(pair);
        self.verts.push(v);
        self.weights.push(weight);
    }

    fn remove(&mut self, k: usize) {
        self.pairs.remove(k);
        self.verts.remove(k);
        self.weights.remove(k);
        self.gram.remove(k);
        for g in &mut self.gram {
            g.remove(k);
        }
    }

    /// Weights of the point of minimum norm in the affine hull, or `None`
    /// when the vertices are numerically affinely dependent.
    fn affine_minimizer(&self) -> Option<Vec<f64>> {
        let n = self.verts.len();
        // (G + 11ᵀ)μ = 1 has the affine minimizer (up to scaling) as its
        // solution and is positive definite for affinely independent vertices.
        let m = DMatrix::from_fn(n, n, |r, c| self.gram[r][c] + 1.0);
        let chol = m.cholesky()?;
        let mu = chol.solve(&DVector::from_element(n, 1.0));
        let s = mu.sum();
        if !(s.is_finite() && s > 0.0) {
            return None;
        }
        Some(mu.iter().map(|v| v / s).collect())
    }

    fn point(&self, dim: usize) -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for (v, &w) in self.verts.iter().zip(&self.weights) {
            for (x, a) in x.iter_mut().zip(v) {
                *x += w * a;
            }
        }
        x
    }

    /// Witness pair `(Σ w·a_i, Σ w·b_j)`.
    fn witnesses(&self, a: &Side, b: &Side) -> (Vec<f64>, Vec<f64>) {
        let mut p = vec![0.0; a.dim];
        let mut q = vec![0.0; a.dim];
        for (&(i, j), &w) in self.pairs.iter().zip(&self.weights) {
            for (x, v) in p.iter_mut().zip(a.row(i)) {
                *x += w * v;
            }
            for (x, v) in q.iter_mut().zip(b.row(j)) {
                *x += w * v;
            }
        }
        (p, q)
    }

    /// Wolfe's minor cycle: move toward the affine minimizer, dropping
    /// vertices whose weight reaches zero, until it lies inside the hull.
    fn correct(&mut self) -> bool {
        loop {
            let Some(mu) = self.affine_minimizer() else {
                return false;
            };
            if mu.iter().all(|&m| m > 0.0) {
                self.weights = mu;
                return true;
            }
            let mut theta = 1.0;
            let mut hit = 0;
            for (k, (&l, &m)) in self.weights.iter().zip(&mu).enumerate() {
                if m <= 0.0 {
                    let t = l / (l - m);
                    if t < theta {
                        theta = t;
                        hit = k;
                    }
                }
            }
            for (l, m) in self.weights.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m;
            }
            self.weights[hit] = 0.0;
            for k in (0..self.weights.len()).rev() {
                if self.weights[k] <= 0.0 {
                    self.remove(k);
                }
            }
            let total: f64 = self.weights.iter().sum();
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn difference(a: &Side, b: &Side, i: usize, j: usize) -> Vec<f64> {
    a.row(i).iter().zip(b.row(j)).map(|(x, y)| x - y).collect()
}

fn solve<P: AsRef<[f64]>>(
    a_src: &[P],
    b_src: &[P],
    dim: usize,
    cfg: &SeparabilityConfig,
    mode: Mode,
) -> Result<HullDistance> {
    let total = a_src.len() + b_src.len();
    let mut center = vec![0.0; dim];
    for r in a_src.iter().chain(b_src) {
        for (c, v) in center.iter_mut().zip(r.as_ref()) {
            *c += v;
        }
    }
    center.iter_mut().for_each(|c| *c /= total as f64);

    let mut a = Side::new(a_src, &center);
    let mut b = Side::new(b_src, &center);
    let scale = a
        .rows
        .chunks_exact(dim)
        .chain(b.rows.chunks_exact(dim))
        .map(norm)
        .fold(0.0, f64::max);
    let floor = cfg.gap_tol * scale;
    let noise = 64.0 * f64::EPSILON * scale * scale;

    // Start from the vertices extreme along the centroid difference.
    let z0: Vec<f64> = a.mean().iter().zip(&b.mean()).map(|(x, y)| x - y).collect();
    a.project(&z0);
    b.project(&z0);
    let (i0, j0) = (argmin(&a.proj), argmax(&b.proj));
    let mut corral = Corral::new();
    corral.push((i0, j0), difference(&a, &b, i0, j0), 1.0);

    let cap = cfg.iteration_cap(total);
    let mut best: Option<HullDistance> = None;

    for iter in 0..=cap {
        let z = corral.point(dim);
        let zz = dot(&z, &z);
        let upper = zz.sqrt();
        a.project(&z);
        b.project(&z);
        let (i_fw, j_fw) = (argmin(&a.proj), argmax(&b.proj));
        let support = a.proj[i_fw] - b.proj[j_fw];
        let gap = (zz - support).max(0.0);
        let lower = if upper > 0.0 { (support / upper).max(0.0) } else { 0.0 };

        let current = |corral: &Corral| {
            let (p, q) = corral.witnesses(&a, &b);
            HullDistance {
                distance: upper,
                witness_a: p.iter().zip(&center).map(|(p, c)| p + c).collect(),
                witness_b: q.iter().zip(&center).map(|(q, c)| q + c).collect(),
                lower_bound: lower.min(upper),
                gap,
                iterations: iter,
            }
        };

        let converged = gap <= cfg.gap_tol * zz || upper <= floor || gap <= noise;
        let decided = match mode {
            Mode::Exact => false,
            Mode::Decide(eps) => lower > eps || upper <= eps,
        };
        // A vertex already in the corral cannot improve the affine
        // minimizer; the remaining gap is rounding error.
        let stalled = corral.pairs.contains(&(i_fw, j_fw));
        if converged || decided || stalled {
            return Ok(current(&corral));
        }
        if best.as_ref().is_none_or(|h| upper < h.distance) {
            best = Some(current(&corral));
        }
        if iter == cap {
            break;
        }

        let snapshot = (corral.pairs.clone(), corral.weights.clone());
        corral.push((i_fw, j_fw), difference(&a, &b, i_fw, j_fw), 0.0);
        if !corral.correct() {
            // The new vertex is affinely dependent on the corral to working
            // precision, so no further progress is possible.
            let mut restored = Corral::new();
            for (&(i, j), &w) in snapshot.0.iter().zip(&snapshot.1) {
                restored.push((i, j), difference(&a, &b, i, j), w);
            }
            return Ok(current(&restored));
        }
    }

    let best = best.expect("at least one iterate");
    Err(Error::NoConvergence {
        iterations: cap,
        distance: best.distance,
        gap: best.gap,
    })
}
