use ddreg_cli::bspline::{bspline_basis, bspline_full_basis, SplineKnots};
use ddreg_testkit::bspline::{bernstein3, de_boor};
use proptest::prelude::*;

#[test]
fn df3_uniform_grid_matches_bernstein_and_de_boor() {
    let x: Vec<f64> = (0..=60).map(|k| -1.5 + k as f64 * 0.05).collect();
    let knots = SplineKnots::for_column(&x, 3).unwrap();
    assert_eq!(knots.degree, 3);
    let full = bspline_full_basis(&x, 3).unwrap();
    let reduced = bspline_basis(&x, 3).unwrap();
    for (i, &xi) in x.iter().enumerate() {
        let bern = bernstein3(-1.5, 1.5, xi);
        for j in 0..4 {
            let rec = de_boor(j, 3, &knots.knots, xi);
            assert!(
                (full[(i, j)] - rec).abs() < 1e-12,
                "row {i} col {j}: {} vs {rec}",
                full[(i, j)]
            );
            assert!((full[(i, j)] - bern[j]).abs() < 1e-12);
        }
        for j in 0..3 {
            assert_eq!(reduced[(i, j)], full[(i, j + 1)]);
        }
    }
}

#[test]
fn interior_knots_match_de_boor() {
    let x: Vec<f64> = (0..200)
        .map(|k| ((k * 37) % 200) as f64 / 7.0 + (k as f64).sqrt())
        .collect();
    for df in [4, 5, 7] {
        let knots = SplineKnots::for_column(&x, df).unwrap();
        let full = bspline_full_basis(&x, df).unwrap();
        for (i, &xi) in x.iter().enumerate() {
            for j in 0..=df {
                let rec = de_boor(j, knots.degree, &knots.knots, xi);
                assert!(
                    (full[(i, j)] - rec).abs() < 1e-12,
                    "df {df} row {i} col {j}"
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn rows_partition_unity(
        xs in prop::collection::vec(-50.0f64..50.0, 12..80),
        df in 2usize..7,
    ) {
        let mut distinct = xs.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        prop_assume!(distinct.len() >= df);
        let full = bspline_full_basis(&xs, df).unwrap();
        prop_assert_eq!(full.ncols(), df + 1);
        for i in 0..xs.len() {
            let s: f64 = full.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12, "row {} sums to {}", i, s);
            prop_assert!(full.row(i).iter().all(|&v| v >= -1e-15));
        }
    }
}
