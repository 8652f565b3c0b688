use hullprobe::separability::{hull_distance, is_separable, max_margin_separator, SeparabilityConfig};
use hullprobe_testkit::{in_box, oracle::qp_hull_distance, rng};
use proptest::prelude::*;
use rand::Rng;

fn cfg() -> SeparabilityConfig {
    SeparabilityConfig::default()
}

/// Two random point sets in boxes offset along a random direction.
fn instance(seed: u64, separated: bool) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut r = rng(seed);
    let dim = r.random_range(1..=3);
    let na = r.random_range(1..=8);
    let nb = r.random_range(1..=8);
    let a = in_box(&mut r, na, dim, 0.0, 1.0);
    let shift = if separated { r.random_range(1.2..3.0) } else { r.random_range(0.0..0.5) };
    let b = in_box(&mut r, nb, dim, shift, shift + 1.0);
    (a, b)
}

#[test]
fn matches_qp_oracle_on_separated_instances() {
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let (a, b) = instance(seed, true);
        let d = hull_distance(&a, &b, &cfg()).unwrap().distance;
        let o = qp_hull_distance(&a, &b);
        let rel = (d - o).abs() / o;
        worst = worst.max(rel);
        assert!(rel <= 1e-5, "seed {seed}: {d} vs oracle {o}");
    }
    eprintln!("worst relative error {worst:e}");
}

#[test]
fn matches_qp_oracle_on_overlapping_instances() {
    for seed in 1000..1100 {
        let (a, b) = instance(seed, false);
        let d = hull_distance(&a, &b, &cfg()).unwrap().distance;
        let o = qp_hull_distance(&a, &b);
        assert!((d - o).abs() <= 1e-5 * o.max(1.0), "seed {seed}: {d} vs oracle {o}");
    }
}

#[test]
fn boxes_in_unit_square_and_offset_square() {
    // Six points in [0,1]² against six in [2,3]².
    for seed in 0..20 {
        let mut r = rng(500 + seed);
        let a = in_box(&mut r, 6, 2, 0.0, 1.0);
        let b = in_box(&mut r, 6, 2, 2.0, 3.0);
        let d = hull_distance(&a, &b, &cfg()).unwrap().distance;
        let o = qp_hull_distance(&a, &b);
        assert!((d - o).abs() <= 1e-5 * o);
    }
}

#[test]
fn margin_is_half_the_distance() {
    for seed in 0..200 {
        let (a, b) = instance(seed, true);
        let d = hull_distance(&a, &b, &cfg()).unwrap().distance;
        let h = max_margin_separator(&a, &b, &cfg()).unwrap();
        assert!((d - 2.0 * h.margin).abs() <= 1e-6 * (1.0 + d));
        let o = qp_hull_distance(&a, &b);
        assert!((h.margin - 0.5 * o).abs() <= 1e-5 * o);
    }
}

#[test]
fn nested_hull_is_not_separable() {
    let a = vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 4.0], vec![4.0, 4.0]];
    let centroid = vec![vec![2.0, 2.0]];
    assert!(!is_separable(&a, &centroid, &cfg()).unwrap());
    assert!(qp_hull_distance(&a, &centroid) < 1e-9);
}

#[test]
fn unit_squares_at_distance_one() {
    let a = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let b: Vec<Vec<f64>> = a.iter().map(|p| vec![p[0] + 2.0, p[1]]).collect();
    assert!(is_separable(&a, &b, &cfg()).unwrap());
    let d = hull_distance(&a, &b, &cfg()).unwrap().distance;
    assert!((d - 1.0).abs() < 1e-9);
}

#[test]
fn witnesses_attain_the_distance() {
    for seed in 0..50 {
        let (a, b) = instance(seed, true);
        let h = hull_distance(&a, &b, &cfg()).unwrap();
        let w: f64 = h
            .witness_a
            .iter()
            .zip(&h.witness_b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        assert!((w - h.distance).abs() <= 1e-8 * (1.0 + h.distance));
        assert!(h.lower_bound <= h.distance);
    }
}

/// Distances below this are zero to the solver's stated resolution
/// (`gap_tol` times the data radius about its mean).
fn resolution(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let all: Vec<&Vec<f64>> = a.iter().chain(b).collect();
    let dim = all[0].len();
    let mean: Vec<f64> = (0..dim)
        .map(|k| all.iter().map(|p| p[k]).sum::<f64>() / all.len() as f64)
        .collect();
    let radius = all
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    cfg().gap_tol * radius
}

/// Equal to 1e-9 relative, or both numerically zero.
fn close(x: f64, y: f64, zero: f64) -> bool {
    (x <= zero && y <= zero) || (x - y).abs() <= 1e-9 * x.max(y)
}

fn point_set(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), 1..=8)
}

fn pair() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..=3).prop_flat_map(|d| (point_set(d), point_set(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn symmetric_exactly((a, b) in pair()) {
        let ab = hull_distance(&a, &b, &cfg()).unwrap().distance;
        let ba = hull_distance(&b, &a, &cfg()).unwrap().distance;
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn translation_invariant((a, b) in pair(), t in prop::collection::vec(-100.0f64..100.0, 3)) {
        let shift = |s: &[Vec<f64>]| -> Vec<Vec<f64>> {
            s.iter().map(|p| p.iter().zip(&t).map(|(x, y)| x + y).collect()).collect()
        };
        let d0 = hull_distance(&a, &b, &cfg()).unwrap().distance;
        let d1 = hull_distance(&shift(&a), &shift(&b), &cfg()).unwrap().distance;
        prop_assert!(close(d0, d1, resolution(&a, &b)), "{} vs {}", d0, d1);
    }

    #[test]
    fn scaling_equivariant((a, b) in pair(), c in 0.01f64..100.0) {
        let scale = |s: &[Vec<f64>]| -> Vec<Vec<f64>> {
            s.iter().map(|p| p.iter().map(|x| x * c).collect()).collect()
        };
        let d0 = hull_distance(&a, &b, &cfg()).unwrap().distance;
        let d1 = hull_distance(&scale(&a), &scale(&b), &cfg()).unwrap().distance;
        prop_assert!(close(d1, c * d0, c * resolution(&a, &b)), "{} vs {}", d1, c * d0);
    }

    #[test]
    fn separator_has_no_margin_violations((a, b) in pair()) {
        let cfg = cfg();
        if is_separable(&a, &b, &cfg).unwrap() {
            let h = max_margin_separator(&a, &b, &cfg).unwrap();
            let slack = cfg.gap_tol * h.margin.max(1.0);
            for p in &a {
                prop_assert!(h.signed_distance(p) >= h.margin - slack);
            }
            for q in &b {
                prop_assert!(-h.signed_distance(q) >= h.margin - slack);
            }
            let n: f64 = h.normal.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
