mod common;

use proptest::prelude::*;

use perclab::crossings::loop_erase;
use perclab::electrical::{
    bfs_layer_cutsets, flow_energy, foster_check, foster_check_factor, nash_williams_bound, resistance_between,
    Flow,
};
use perclab::renorm::{count_disjoint_crossings, SiteField};
use perclab::{largest_cluster, sample_configuration, LatticeSpec, Network};

use common::{brute_force_crossings, graph_corpus};

fn graph(seed: u64, max_vertices: usize) -> Network {
    graph_corpus(1, 2, max_vertices, seed).pop().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resistance_is_a_metric(seed in any::<u64>(), a in 0usize..100, b in 0usize..100, c in 0usize..100) {
        let net = graph(seed, 12);
        let n = net.vertex_count();
        let (x, y, z) = (a % n, b % n, c % n);
        let r = |u: usize, v: usize| if u == v { 0.0 } else { resistance_between(&net, u, v).unwrap() };
        prop_assert!((r(x, y) - r(y, x)).abs() < 1e-9);
        prop_assert!(r(x, z) <= r(x, y) + r(y, z) + 1e-9);
        if x != y {
            prop_assert!(r(x, y) > 0.0);
            prop_assert!(r(x, y) <= net.shortest_path(x, y).unwrap().len() as f64 - 1.0 + 1e-9);
        }
    }

    #[test]
    fn removing_an_edge_never_lowers_resistance(seed in any::<u64>(), pick in 0usize..1000, a in 0usize..100, b in 0usize..100) {
        let net = graph(seed, 12);
        let n = net.vertex_count();
        let (x, y) = (a % n, b % n);
        prop_assume!(x != y);
        let e = pick % net.edge_count();
        if let Some(thinner) = net.without_edges(&[e]) {
            let before = resistance_between(&net, x, y).unwrap();
            let after = resistance_between(&thinner, x, y).unwrap();
            prop_assert!(after >= before - 1e-9);
        }
    }

    #[test]
    fn nash_williams_and_path_flow_sandwich(seed in any::<u64>(), a in 0usize..100, b in 0usize..100) {
        let net = graph(seed, 12);
        let n = net.vertex_count();
        let (x, y) = (a % n, b % n);
        prop_assume!(x != y);
        let lower = nash_williams_bound(&net, x, y, &bfs_layer_cutsets(&net, x, y)).unwrap();
        let r = resistance_between(&net, x, y).unwrap();
        let path = net.shortest_path(x, y).unwrap();
        let upper = flow_energy(&net, &Flow::along_path(&net, &path).unwrap()).unwrap();
        prop_assert!(lower <= r + 1e-9);
        prop_assert!(r <= upper + 1e-9);
        prop_assert!((upper - (path.len() - 1) as f64).abs() < 1e-12);
    }

    #[test]
    fn foster_identity(seed in any::<u64>()) {
        let net = graph(seed, 12);
        prop_assert!(foster_check(&net).unwrap().abs() < 1e-8);
        prop_assert!(foster_check_factor(&net).unwrap().abs() < 1e-8);
    }

    #[test]
    fn raising_p_only_opens_edges(seed in any::<u64>(), p in 0.05f64..0.95, dp in 0.0f64..0.05) {
        let lo = sample_configuration(LatticeSpec::new(2, 6, p, seed).unwrap()).unwrap();
        let hi = sample_configuration(LatticeSpec::new(2, 6, p + dp, seed).unwrap()).unwrap();
        for (a, b) in lo.words().iter().zip(hi.words()) {
            prop_assert_eq!(a & !b, 0);
        }
        prop_assert!(largest_cluster(&lo).len() <= largest_cluster(&hi).len());
    }

    #[test]
    fn loop_erasure_gives_a_simple_path(walk in prop::collection::vec(0usize..8, 1..60)) {
        let erased = loop_erase(&walk);
        prop_assert_eq!(erased.first(), walk.first());
        prop_assert_eq!(erased.last(), walk.last());
        let mut seen = std::collections::HashSet::new();
        prop_assert!(erased.iter().all(|v| seen.insert(*v)));
        for w in erased.windows(2) {
            prop_assert!(walk.windows(2).any(|s| s == w));
        }
    }

    #[test]
    fn crossing_count_matches_brute_force(columns in 1usize..6, rows in 1usize..5, bits in any::<u32>()) {
        let occupied: Vec<bool> = (0..columns * rows).map(|i| bits >> i & 1 == 1).collect();
        let field = SiteField::new(columns, rows, occupied.clone()).unwrap();
        prop_assert_eq!(count_disjoint_crossings(&field).count, brute_force_crossings(columns, rows, &occupied));
    }
}
