use proptest::prelude::*;
use threshold_contact::graphs::{
    build_torus, build_tree, GraphKind, GraphSpec, RootVariant, Vertex,
};

fn root_variant() -> impl Strategy<Value = RootVariant> {
    prop_oneof![Just(RootVariant::SonOnly), Just(RootVariant::FullDegree)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn torus_is_simple_symmetric_and_2d_regular(d in 1usize..=3, side in 3usize..=7) {
        let g = build_torus(d, side).unwrap();
        prop_assert!(g.check_simple_symmetric().is_ok());
        prop_assert_eq!(g.vertex_count(), side.pow(d as u32));
        prop_assert_eq!(g.regular_degree(), Some(2 * d));
        for v in 0..g.vertex_count() {
            prop_assert_eq!(g.degree(Vertex::from(v)), 2 * d);
        }
    }

    #[test]
    fn torus_shift_is_an_automorphism(
        d in 1usize..=3,
        side in 3usize..=6,
        shift in proptest::collection::vec(-10i64..10, 3),
    ) {
        let g = build_torus(d, side).unwrap();
        let moved = |x: Vertex| {
            let c = g.torus_coords(x).unwrap();
            let c: Vec<i64> = c.iter().zip(&shift).map(|(&a, &s)| a as i64 + s).collect();
            g.torus_vertex(&c).unwrap()
        };
        for v in 0..g.vertex_count() {
            let x = Vertex::from(v);
            let mut image: Vec<Vertex> = g.neighbors(x).map(moved).collect();
            image.sort();
            let direct: Vec<Vertex> = g.neighbors(moved(x)).collect();
            prop_assert_eq!(image, direct);
        }
    }

    #[test]
    fn tree_orientation_gives_n_sons(n in 2usize..=4, depth in 1usize..=5, root in root_variant()) {
        let g = build_tree(n, depth, root).unwrap();
        prop_assert!(g.check_simple_symmetric().is_ok());
        let mut parents = 0;
        for v in 0..g.vertex_count() {
            let x = Vertex::from(v);
            let sons = g.oriented_sons(x).unwrap();
            let level = g.tree_depth_of(x).unwrap();
            let expected = match (level, v, root) {
                (l, _, _) if l == depth => 0,
                (_, 0, RootVariant::FullDegree) => n + 1,
                _ => n,
            };
            prop_assert_eq!(sons.len(), expected);
            for s in sons {
                prop_assert_eq!(g.parent(Vertex(s)), Some(x));
                prop_assert_eq!(g.tree_depth_of(Vertex(s)), Some(level + 1));
            }
            match g.parent(x) {
                Some(p) => {
                    parents += 1;
                    prop_assert!(g.oriented_sons(p).unwrap().contains(&x.0));
                }
                None => prop_assert_eq!(v, 0),
            }
        }
        // removing the parent links leaves one rooted tree
        prop_assert_eq!(parents, g.vertex_count() - 1);
    }

    #[test]
    fn spec_strings_roundtrip(d in 1usize..=4, side in 3usize..=40, n in 2usize..=6, depth in 1usize..=12, root in root_variant()) {
        let t = GraphSpec::Torus { d, side };
        prop_assert_eq!(t.to_string().parse::<GraphSpec>().unwrap(), t);
        let r = GraphSpec::Tree { n, depth, root };
        prop_assert_eq!(r.to_string().parse::<GraphSpec>().unwrap(), r);
    }
}

#[test]
fn spec_string_examples() {
    let g: GraphSpec = "torus:d=2,L=32".parse().unwrap();
    assert_eq!(
        g.build().unwrap().kind(),
        GraphKind::Torus { d: 2, side: 32 }
    );
    let t: GraphSpec = "tree:n=3,depth=10,root=son_only".parse().unwrap();
    assert_eq!(
        t.build().unwrap().kind(),
        GraphKind::Tree {
            n: 3,
            depth: 10,
            root: RootVariant::SonOnly
        }
    );
    for bad in [
        "torus:d=2",
        "tree:n=3",
        "cube:d=2,L=4",
        "torus:d=x,L=4",
        "tree:n=2,depth=3,root=up",
    ] {
        assert!(bad.parse::<GraphSpec>().is_err(), "{bad}");
    }
}
