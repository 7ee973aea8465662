//! Monte Carlo properties checked at 4 standard errors.

use threshold_contact::experiments::{
    bounds_report, critical_estimate, dual_survival, duality_check, lambda_scan, mean_xi,
    survival_probability, zeta_statistics, CriticalParams, Family, DEFAULT_SATURATION_CAP,
    OBSERVED_VERTEX,
};
use threshold_contact::graphs::{build_torus, build_tree, FiniteGraph, RootVariant};
use threshold_contact::moments::{integrate_second_moment, mean_xi_closed_form};

const X: threshold_contact::graphs::Vertex = OBSERVED_VERTEX;

#[test]
fn infection_probability_is_below_mean_count() {
    let graphs: [(FiniteGraph, f64); 2] = [
        (build_torus(2, 8).unwrap(), 0.3),
        (build_tree(3, 5, RootVariant::FullDegree).unwrap(), 0.4),
    ];
    for (g, lambda) in &graphs {
        let p = survival_probability(g, *lambda, 1.5, X, 20_000, 11).unwrap();
        let m = mean_xi(g, *lambda, &[1.5], X, 20_000, 12).unwrap()[0];
        assert!(p.value <= m.value + 4.0 * m.std_error, "{p:?} vs {m:?}");
    }
}

#[test]
fn mean_count_follows_the_closed_form() {
    for (g, lambda, degree) in [
        (build_torus(1, 12).unwrap(), 0.4, 2),
        (build_torus(2, 8).unwrap(), 0.3, 4),
    ] {
        let times = [0.5, 1.0, 2.0];
        let est = mean_xi(&g, lambda, &times, X, 20_000, 5).unwrap();
        for (t, e) in times.iter().zip(est) {
            let want = mean_xi_closed_form(lambda, degree, *t);
            assert!(
                (e.value - want).abs() < 4.0 * e.std_error,
                "t = {t}: {e:?} vs {want}"
            );
        }
    }
}

#[test]
fn drifted_mean_is_conserved() {
    let g = build_torus(2, 8).unwrap();
    let times = [0.5, 1.0, 2.0];
    for (t, (mean, _)) in times
        .iter()
        .zip(zeta_statistics(&g, 0.3, &times, X, 20_000, 6).unwrap())
    {
        assert!(
            (mean.value - 1.0).abs() < 4.0 * mean.std_error,
            "t = {t}: {mean:?}"
        );
    }
}

#[test]
fn drifted_second_moment_matches_the_moment_equation() {
    let g = build_torus(2, 16).unwrap();
    let times = [0.25, 0.5];
    let mc = zeta_statistics(&g, 0.3, &times, X, 40_000, 8).unwrap();
    let ode = integrate_second_moment(2, 0.3, 8, &times).unwrap();
    for ((_, second), p) in mc.iter().zip(&ode) {
        let slack = 4.0 * second.std_error + p.leakage;
        assert!(
            (second.value - p.g0).abs() < slack,
            "t = {}: {second:?} vs {p:?}",
            p.t
        );
    }
}

#[test]
fn duality_battery_has_at_most_one_outlier() {
    let settings: Vec<(FiniteGraph, f64, f64)> = vec![
        (build_torus(1, 10).unwrap(), 0.7, 3.0),
        (build_torus(1, 10).unwrap(), 1.5, 2.0),
        (build_torus(1, 16).unwrap(), 2.0, 1.0),
        (build_torus(2, 6).unwrap(), 0.3, 2.0),
        (build_torus(2, 6).unwrap(), 0.6, 1.5),
        (build_torus(3, 4).unwrap(), 0.2, 1.0),
        (build_tree(2, 6, RootVariant::FullDegree).unwrap(), 0.5, 2.0),
        (build_tree(3, 5, RootVariant::FullDegree).unwrap(), 0.4, 3.0),
        (build_tree(3, 5, RootVariant::SonOnly).unwrap(), 0.8, 1.5),
        (build_tree(4, 4, RootVariant::FullDegree).unwrap(), 0.3, 1.0),
    ];
    let z: Vec<f64> = settings
        .iter()
        .enumerate()
        .map(|(i, (g, lambda, t))| {
            duality_check(g, X, *lambda, *t, 10_000, 100 + i as u64)
                .unwrap()
                .z_score
        })
        .collect();
    assert!(z.iter().filter(|&&z| z > 4.0).count() <= 1, "{z:?}");
}

#[test]
fn scan_survival_is_monotone_per_trajectory() {
    let grid: Vec<f64> = (1..=8).map(|k| 0.1 * k as f64).collect();
    for g in [
        build_torus(1, 20).unwrap(),
        build_tree(3, 6, RootVariant::SonOnly).unwrap(),
    ] {
        let scan = lambda_scan(&g, &grid, 3.0, X, 2_000, 9).unwrap();
        assert_eq!(scan.monotonicity_violations, 0);
        assert!(scan
            .rows
            .windows(2)
            .all(|w| w[0].estimate.value <= w[1].estimate.value));
    }
}

#[test]
fn bounds_are_ordered_and_trend_to_one() {
    let trees = bounds_report(Family::Tree(&[2, 3, 5, 10, 20])).unwrap();
    for r in &trees {
        assert!(r.lower <= r.upper.unwrap());
        assert!(r.product_lower < 1.0 && r.product_upper.unwrap() > 1.0);
    }
    let ds: Vec<usize> = (3..=10).collect();
    let rows = bounds_report(Family::Lattice(&ds)).unwrap();
    assert!(rows[0].upper.is_none() && rows[0].upper_note.is_some());
    let products: Vec<f64> = rows[1..].iter().map(|r| r.product_upper.unwrap()).collect();
    assert!(products.windows(2).all(|w| w[1] < w[0]), "{products:?}");
    assert!(products.iter().all(|&p| p > 1.0));
    for r in &rows[1..] {
        assert!(r.lower <= r.upper.unwrap());
    }
}

#[test]
fn critical_estimate_brackets_the_crossing() {
    let g = build_tree(4, 10, RootVariant::FullDegree).unwrap();
    let p = CriticalParams {
        t: 15.0,
        replicas: 1_500,
        threshold: 0.02,
        tol: 0.02,
        seed: 21,
        cap: DEFAULT_SATURATION_CAP,
    };
    let c = critical_estimate(&g, (0.05, 0.6), X, p).unwrap();
    assert!(0.05 <= c.lo && c.lo < c.hi && c.hi <= 0.6 && c.hi - c.lo <= 0.02);
    let at = |l: f64| c.evaluations.iter().find(|(x, _)| *x == l).unwrap().1.value;
    assert!(at(c.lo) < 0.02 && at(c.hi) >= 0.02);
    assert!(
        c.estimate >= 0.2 - 0.05 && c.estimate <= 1.0 / 3.0 + 0.05,
        "{c:?}"
    );
    // a fresh evaluation agrees with the side the bisection put each end on
    let above = dual_survival(&g, c.hi + 0.05, 15.0, X, 1_500, 99, DEFAULT_SATURATION_CAP).unwrap();
    assert!(above.value >= 0.02);
}
