use proptest::prelude::*;
use threshold_contact::moments::{
    build_h, build_q, check_harmonic, expm_apply, expm_apply_transpose, integrate_second_moment,
    qcheck, second_moment_bound, second_moment_on, LatticeBox,
};
use threshold_contact::walk::hitting_table;

mod common;
use common::dense_expm_apply;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn structural_checks_hold(d in 1usize..=3, lambda in 0.05f64..1.0, radius in 2u32..=4) {
        let q = build_q(d, lambda, radius).unwrap();
        let c = qcheck(&q, 400).unwrap();
        prop_assert!(c.row_sums, "row sums off by {}", c.max_row_sum_error);
        prop_assert!(c.norm_growth);
        prop_assert!(c.shifted_nonnegative);
        prop_assert!(c.exp_positive, "min entry {}", c.min_exp_entry);
    }

    #[test]
    fn off_diagonal_entries_are_nonnegative(d in 1usize..=3, lambda in 0.05f64..1.0, radius in 2u32..=4) {
        let q = build_q(d, lambda, radius).unwrap();
        for r in 0..q.dim() {
            for (c, v) in q.row(r) {
                if c != r {
                    prop_assert!(v >= 0.0);
                } else if r != q.lattice.origin() {
                    prop_assert!(v >= -4.0 * lambda * d as f64 - 1e-15);
                }
            }
        }
    }

    #[test]
    fn expm_matches_dense_series(lambda in 0.05f64..1.0, t in 0.0f64..2.0, seed in 0u64..1000) {
        let q = build_q(1, lambda, 2).unwrap();
        let n = q.dim();
        let dense: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| q.entry(i, j)).collect()).collect();
        let v: Vec<f64> = (0..n).map(|i| ((seed + 7 * i as u64) % 11) as f64 / 10.0).collect();
        let want = dense_expm_apply(&dense, &v, t);
        let got = expm_apply(&q, &v, t).unwrap();
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
        let transposed: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| q.entry(j, i)).collect()).collect();
        let want_t = dense_expm_apply(&transposed, &v, t);
        let got_t = expm_apply_transpose(&q, &v, t).unwrap();
        for (a, b) in got_t.iter().zip(&want_t) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}

#[test]
fn box_coordinates_roundtrip() {
    let b = LatticeBox { d: 3, radius: 2 };
    assert_eq!(b.len(), 125);
    for i in 0..b.len() {
        assert_eq!(b.index(&b.coords(i)), Some(i));
    }
    assert_eq!(b.coords(b.origin()), vec![0, 0, 0]);
    assert_eq!(b.index(&[3, 0, 0]), None);
}

#[test]
fn harmonic_function_is_bounded_and_fixed() {
    let (d, lambda, radius) = (5usize, 0.35, 4u32);
    let table = hitting_table(d, radius).unwrap();
    let h = build_h(d, lambda, &table, radius).unwrap();
    let b = h.b_lambda;
    assert!(b > 0.0);
    let lo = h.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = h.values.iter().copied().fold(0.0, f64::max);
    assert!(b <= lo && lo <= hi && hi <= 1.0 + b + 1e-12);

    let q = build_q(d, lambda, radius).unwrap();
    let report = check_harmonic(&q, &h, radius - 2).unwrap();
    assert!(
        report.max_residual < report.tolerance.max(1e-3),
        "{report:?}"
    );
    assert!(report.origin_identity.abs() < 1e-12);

    for t in [0.25, 0.5, 1.0] {
        let moved = expm_apply(&q, &h.values, t).unwrap();
        let worst = (0..q.dim())
            .filter(|&i| q.lattice.sup_norm(i) + 2 <= radius)
            .map(|i| (moved[i] - h.values[i]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "t = {t}: {worst}");
    }

    let bound = second_moment_bound(&h);
    for p in second_moment_on(&q, &[0.5, 1.0, 2.0, 4.0]).unwrap() {
        assert!(p.g0 <= bound + p.leakage, "{p:?} vs {bound}");
    }
}

#[test]
fn below_threshold_is_refused() {
    let table = hitting_table(4, 3).unwrap();
    assert!(build_h(4, 0.5, &table, 3).is_err());
    let t3 = hitting_table(3, 3).unwrap();
    assert!(build_h(3, 5.0, &t3, 3).is_err());
}

#[test]
fn second_moment_grows_from_one() {
    let pts = integrate_second_moment(2, 0.3, 6, &[0.0, 0.1, 0.5]).unwrap();
    assert!((pts[0].g0 - 1.0).abs() < 1e-15);
    assert!(pts[1].g0 > 1.0 && pts[2].g0 > pts[1].g0);
    assert!(integrate_second_moment(2, 0.3, 6, &[1.0, 0.5]).is_err());
}
