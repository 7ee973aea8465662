use proptest::prelude::*;
use threshold_contact::clocks::build_schedule;
use threshold_contact::graphs::{build_torus, build_tree, FiniteGraph, RootVariant, Vertex};
use threshold_contact::processes::{
    coupled_attractiveness, coupled_dual_branch, coupled_run_eta_xi, coupled_run_eta_zeta, run,
    Dual, RealConfig, SpinConfig, VertexSet, ZetaDynamics,
};

const TIMES: [f64; 5] = [0.5, 1.0, 2.0, 3.0, 4.0];

fn small_graph() -> impl Strategy<Value = FiniteGraph> {
    prop_oneof![
        (1usize..=2, 3usize..=6).prop_map(|(d, l)| build_torus(d, l).unwrap()),
        (2usize..=3, 1usize..=4, any::<bool>()).prop_map(|(n, depth, son)| {
            let root = if son {
                RootVariant::SonOnly
            } else {
                RootVariant::FullDegree
            };
            build_tree(n, depth, root).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eta_is_the_support_of_xi(g in small_graph(), lambda in 0.05f64..1.5, seed in any::<u64>()) {
        let s = build_schedule(&g, lambda, 4.0, seed).unwrap();
        let mismatches = coupled_run_eta_xi(&s, &g, &TIMES).unwrap();
        prop_assert!(mismatches.iter().all(|&m| m == 0), "{mismatches:?}");
    }

    #[test]
    fn zeta_support_is_a_contact_process(d in 1usize..=2, side in 3usize..=6, lambda in 0.05f64..1.5, seed in any::<u64>()) {
        let g = build_torus(d, side).unwrap();
        let s = build_schedule(&g, lambda, 4.0, seed).unwrap();
        let mismatches = coupled_run_eta_zeta(&s, &g, &TIMES).unwrap();
        prop_assert!(mismatches.iter().all(|&m| m == 0), "{mismatches:?}");
        let z = ZetaDynamics::new(&g, lambda).unwrap();
        let n = g.vertex_count();
        for state in run(&z, &g, &s, RealConfig::all_ones(n), &TIMES).unwrap() {
            for v in 0..n {
                let (value, _) = state.raw(Vertex::from(v));
                prop_assert!(value >= 0.0 && value.is_finite());
            }
        }
    }

    #[test]
    fn ordered_starts_stay_ordered(
        g in small_graph(),
        lambda in 0.05f64..1.5,
        seed in any::<u64>(),
        bits in proptest::collection::vec((any::<bool>(), any::<bool>()), 64),
    ) {
        let n = g.vertex_count();
        let pick = |i: usize| bits[i % bits.len()];
        let upper = SpinConfig::from_bits((0..n).map(|i| pick(i).0 || pick(i).1).collect());
        let lower = SpinConfig::from_bits((0..n).map(|i| pick(i).0).collect());
        let s = build_schedule(&g, lambda, 4.0, seed).unwrap();
        let ok = coupled_attractiveness(&s, &g, upper, lower, &TIMES).unwrap();
        prop_assert!(ok.iter().all(|&b| b));
    }

    #[test]
    fn dual_contains_branching(n in 2usize..=4, depth in 2usize..=6, lambda in 0.1f64..2.0, seed in any::<u64>(), start in 0usize..8) {
        let g = build_tree(n, depth, RootVariant::SonOnly).unwrap();
        let x = Vertex::from(start % g.vertex_count());
        let s = build_schedule(&g, lambda, 4.0, seed).unwrap();
        let ok = coupled_dual_branch(&s, &g, x, &TIMES).unwrap();
        prop_assert!(ok.iter().all(|&b| b));
    }

    #[test]
    fn dual_from_larger_set_is_larger(g in small_graph(), lambda in 0.05f64..1.5, seed in any::<u64>()) {
        let s = build_schedule(&g, lambda, 4.0, seed).unwrap();
        let small = run(&Dual, &g, &s, VertexSet::singleton(Vertex(0)), &TIMES).unwrap();
        let start: VertexSet = [Vertex(0), Vertex::from(g.vertex_count() - 1)].into_iter().collect();
        let big = run(&Dual, &g, &s, start, &TIMES).unwrap();
        for (b, a) in big.iter().zip(&small) {
            prop_assert!(b.is_superset(a));
        }
    }
}

#[test]
fn schedule_for_another_graph_is_rejected() {
    let g = build_torus(1, 5).unwrap();
    let h = build_torus(1, 6).unwrap();
    let s = build_schedule(&h, 0.5, 1.0, 0).unwrap();
    assert!(coupled_run_eta_xi(&s, &g, &[0.5]).is_err());
}

#[test]
fn zeta_needs_a_regular_graph() {
    let g = build_tree(2, 3, RootVariant::SonOnly).unwrap();
    let s = build_schedule(&g, 0.5, 1.0, 0).unwrap();
    assert!(coupled_run_eta_zeta(&s, &g, &[0.5]).is_err());
}
