use nalgebra::DMatrix;
use proptest::prelude::*;

use widthcalc::geometry::{affinely_independent, barycentric, replacement_vertex, PointSet};

fn difference_matrix(points: &[Vec<f64>]) -> DMatrix<f64> {
    let m = points.len();
    DMatrix::from_fn(m - 1, m - 1, |r, c| points[r + 1][c] - points[0][c])
}

fn smallest_singular_value(points: &[Vec<f64>]) -> f64 {
    difference_matrix(points)
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn point_set(max_m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_m)
        .prop_flat_map(|m| prop::collection::vec(prop::collection::vec(-1.0f64..1.0, m - 1), m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn rank_agrees_with_svd(points in point_set(6)) {
        let sigma = smallest_singular_value(&points);
        let ps = PointSet::new(points).unwrap();
        // Complete-pivoting pivots and singular values agree up to a factor
        // depending only on the dimension.
        if sigma > 1e-6 {
            prop_assert!(affinely_independent(&ps, 1e-10));
        }
        if !affinely_independent(&ps, 1e-10) {
            prop_assert!(sigma < 1e-6);
        }
    }

    #[test]
    fn dependent_sets_are_rejected(points in point_set(5), t in -1.0f64..1.0) {
        let mut points = points;
        let m = points.len();
        if m >= 3 {
            let extra = points[0].iter().zip(&points[1]).map(|(a, b)| a + t * (b - a)).collect();
            points[m - 1] = extra;
            prop_assert!(!affinely_independent(&PointSet::new(points).unwrap(), 1e-10));
        }
    }

    #[test]
    fn weights_reproduce_the_point(points in point_set(5), raw in prop::collection::vec(0.01f64..1.0, 5)) {
        prop_assume!(smallest_singular_value(&points) > 1e-3);
        let m = points.len();
        let s: f64 = raw[..m].iter().sum();
        let w: Vec<f64> = raw[..m].iter().map(|v| v / s).collect();
        let a: Vec<f64> = (0..m - 1).map(|r| points.iter().zip(&w).map(|(p, wj)| wj * p[r]).sum()).collect();
        let got = barycentric(&PointSet::new(points).unwrap(), &a).unwrap();
        for (g, e) in got.iter().zip(&w) {
            prop_assert!((g - e).abs() <= 1e-9);
        }
    }

    #[test]
    fn affine_invariance(
        points in point_set(4),
        raw in prop::collection::vec(0.01f64..1.0, 4),
        map in prop::collection::vec(-2.0f64..2.0, 9),
        shift in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        prop_assume!(smallest_singular_value(&points) > 1e-3);
        let m = points.len();
        let n = m - 1;
        let mat = DMatrix::from_fn(n, n, |r, c| map[r * 3 + c]);
        prop_assume!(mat.clone().singular_values().iter().cloned().fold(f64::INFINITY, f64::min) > 1e-2);
        let apply = |p: &[f64]| -> Vec<f64> {
            (0..n).map(|r| (0..n).map(|c| mat[(r, c)] * p[c]).sum::<f64>() + shift[r]).collect()
        };
        let s: f64 = raw[..m].iter().sum();
        let a: Vec<f64> = (0..n).map(|r| points.iter().zip(&raw).map(|(p, wj)| wj * p[r] / s).sum()).collect();
        let before = barycentric(&PointSet::new(points.clone()).unwrap(), &a).unwrap();
        let moved: Vec<Vec<f64>> = points.iter().map(|p| apply(p)).collect();
        let after = barycentric(&PointSet::new(moved).unwrap(), &apply(&a)).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn replacement_contains_query(
        points in point_set(5),
        raw in prop::collection::vec(0.05f64..1.0, 5),
        eta in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let m = points.len();
        let eta = eta[..m - 1].to_vec();
        let ps = PointSet::new(points.clone()).unwrap();
        prop_assume!(smallest_singular_value(&points) > 1e-3);
        prop_assume!((0..m).all(|i| {
            let mut r = points.clone();
            r[i] = eta.clone();
            smallest_singular_value(&r) > 1e-3
        }));
        let s: f64 = raw[..m].iter().sum();
        let a: Vec<f64> = (0..m - 1).map(|r| points.iter().zip(&raw).map(|(p, wj)| wj * p[r] / s).sum()).collect();
        let i = replacement_vertex(&ps, &eta, &a, 1e-10).unwrap();
        let w = barycentric(&ps.replaced(i, &eta).unwrap(), &a).unwrap();
        prop_assert!(w.iter().all(|&v| v >= -1e-10), "{w:?}");
        for j in 0..i {
            let w = barycentric(&ps.replaced(j, &eta).unwrap(), &a).unwrap();
            prop_assert!(w.iter().any(|&v| v < -1e-10), "index {j} also works but {i} returned");
        }
    }
}
