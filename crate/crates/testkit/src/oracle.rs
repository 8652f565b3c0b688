//! Reference solvers that share no code with the library's kernels.

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn combine(points: &[Vec<f64>], w: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (p, &wi) in points.iter().zip(w) {
        for (o, x) in out.iter_mut().zip(p) {
            *o += wi * x;
        }
    }
    out
}

/// Hull distance by accelerated projected gradient on
/// `½‖Aᵀα − Bᵀβ‖²` over the two simplices, with gradient restarts.
pub fn qp_hull_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let dim = a[0].len();
    let total = (a.len() + b.len()) as f64;
    let mut center = vec![0.0; dim];
    for p in a.iter().chain(b) {
        for (c, x) in center.iter_mut().zip(p) {
            *c += x / total;
        }
    }
    let shift = |s: &[Vec<f64>]| -> Vec<Vec<f64>> {
        s.iter()
            .map(|p| p.iter().zip(&center).map(|(x, c)| x - c).collect())
            .collect()
    };
    let (a, b) = (shift(a), shift(b));
    let (m, k) = (a.len(), b.len());

    // Columns of M = [Aᵀ, −Bᵀ]; Lipschitz constant by power iteration on MᵀM.
    let cols: Vec<Vec<f64>> = a
        .iter()
        .cloned()
        .chain(b.iter().map(|p| p.iter().map(|x| -x).collect()))
        .collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; dim];
        for (c, &xi) in cols.iter().zip(x) {
            for (zz, cv) in z.iter_mut().zip(c) {
                *zz += xi * cv;
            }
        }
        z
    };
    let apply_t = |z: &[f64]| -> Vec<f64> {
        cols.iter()
            .map(|c| c.iter().zip(z).map(|(x, y)| x * y).sum())
            .collect()
    };
    let mut v = vec![1.0; m + k];
    let mut lip = 0.0;
    for _ in 0..200 {
        let w = apply_t(&apply(&v));
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            break;
        }
        lip = n / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / n).collect();
    }
    let step = if lip > 0.0 { 1.0 / (lip * 1.05) } else { 1.0 };

    let project = |x: &mut Vec<f64>| {
        let (xa, xb) = x.split_at_mut(m);
        project_simplex(xa);
        project_simplex(xb);
    };
    let objective = |x: &[f64]| -> f64 {
        let z = apply(x);
        0.5 * z.iter().map(|v| v * v).sum::<f64>()
    };

    // Frank–Wolfe gap at x: an upper bound on f(x) − f*.
    let duality_gap = |x: &[f64]| -> f64 {
        let g = apply_t(&apply(x));
        let gx: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        let ma = g[..m].iter().copied().fold(f64::INFINITY, f64::min);
        let mb = g[m..].iter().copied().fold(f64::INFINITY, f64::min);
        gx - ma - mb
    };

    let mut x: Vec<f64> = (0..m + k)
        .map(|i| if i < m { 1.0 / m as f64 } else { 1.0 / k as f64 })
        .collect();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut best = objective(&x);
    let mut best_x = x.clone();
    for it in 0..200_000 {
        let g = apply_t(&apply(&y));
        let mut next: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
        project(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // Gradient-based adaptive restart.
        let restart = g
            .iter()
            .zip(next.iter().zip(&x))
            .map(|(gi, (n, o))| gi * (n - o))
            .sum::<f64>()
            > 0.0;
        if restart {
            t = 1.0;
            y = next.clone();
        } else {
            let beta = (t - 1.0) / t_next;
            y = next
                .iter()
                .zip(&x)
                .map(|(n, o)| n + beta * (n - o))
                .collect();
            t = t_next;
        }
        x = next;
        let f = objective(&x);
        if f < best {
            best = f;
            best_x = x.clone();
        }
        if it % 50 == 0 && duality_gap(&x) <= (1e-13 * f).max(1e-18) {
            break;
        }
    }
    let p = combine(&a, &best_x[..m], dim);
    let q = combine(&b, &best_x[m..], dim);
    p.iter().zip(&q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Smallest point-to-point distance between two sets.
pub fn min_pairwise_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for p in a {
        for q in b {
            let d = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            best = best.min(d);
        }
    }
    best
}

/// Central finite-difference derivative of `f` at `x` along coordinate `i`.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Eigenvalues of a symmetric 2×2 matrix, descending, in closed form.
pub fn eig2(a: f64, b: f64, d: f64) -> (f64, f64) {
    let tr = a + d;
    let disc = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
    (tr / 2.0 + disc, tr / 2.0 - disc)
}
