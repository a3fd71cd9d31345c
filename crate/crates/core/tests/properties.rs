use std::collections::BTreeSet;

use proptest::prelude::*;
use tngeo_core::holo::{build_finite_range_mera, entropy_saturation};
use tngeo_core::mera::{self, random_mera};
use tngeo_core::mps::{self, HomogeneousMPS};
use tngeo_core::netgraph::{
    build_branching_mera_graph_1d, build_mera_graph, build_mps_graph, geodesic, holographic_cut, min_cut, Region,
};
use tngeo_core::statevec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mps_geodesic_is_separation_plus_one(n in 2usize..80, a in 0usize..80, b in 0usize..80) {
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let g = build_mps_graph(n).unwrap();
        prop_assert_eq!(geodesic(&g, a, b).unwrap(), a.abs_diff(b) + 1);
    }

    #[test]
    fn mera_geodesic_is_a_metric(t in 2usize..7, a in 0usize..64, b in 0usize..64, c in 0usize..64) {
        let n = 1 << t;
        let (a, b, c) = (a % n, b % n, c % n);
        prop_assume!(a != b && b != c && a != c);
        let g = build_mera_graph(n, t, true).unwrap();
        let ab = geodesic(&g, a, b).unwrap();
        prop_assert_eq!(ab, geodesic(&g, b, a).unwrap());
        // node counts: the shared endpoint tensor is counted on both sides
        prop_assert!(ab <= geodesic(&g, a, c).unwrap() + geodesic(&g, c, b).unwrap());
    }

    #[test]
    fn min_cut_never_exceeds_the_holographic_cut(t in 2usize..7, len in 1usize..32, start in 0usize..64) {
        let n = 1 << t;
        let len = 3 + len % (n - 3);
        let start = start % (n - len + 1);
        let g = build_mera_graph(n, t, false).unwrap();
        let region = Region::interval(start, len).unwrap();
        prop_assert!(min_cut(&g, &region).unwrap().n_a <= holographic_cut(&g, &region).unwrap());
    }

    #[test]
    fn branching_cut_grows_with_the_schedule(z in 1usize..6) {
        let plain = build_branching_mera_graph_1d(64, &BTreeSet::new()).unwrap();
        let branched = build_branching_mera_graph_1d(64, &BTreeSet::from([z])).unwrap();
        let region = Region::central(16, 64).unwrap();
        prop_assert!(min_cut(&branched, &region).unwrap().n_a >= min_cut(&plain, &region).unwrap().n_a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mps_entropy_is_bounded_by_the_bond(seed in any::<u64>(), chi in 1usize..5, l in 1usize..7) {
        let m = HomogeneousMPS::random(chi, 2, seed).unwrap();
        let s = mps::block_entropy(&m, l, 12).unwrap();
        prop_assert!(s <= 2.0 * (chi as f64).log2() + 1e-9);
        prop_assert!(s >= -1e-12);
    }

    #[test]
    fn mera_state_is_normalized_and_bounded(seed in any::<u64>(), si in any::<bool>(), l in 1usize..8) {
        let m = random_mera(8, 3, 2, seed, si).unwrap();
        let psi = m.state_vector().unwrap();
        let norm: f64 = psi.data().iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
        let cut = min_cut(&m.to_graph().unwrap(), &Region::interval(0, l).unwrap()).unwrap();
        let s = statevec::block_entropy(psi.data(), 8, 2, 0, l).unwrap();
        prop_assert!(s <= cut.weight + 1e-9);
        prop_assert!((mera::block_entropy(&m, 0, l).unwrap() - s).abs() < 1e-9);
    }

    #[test]
    fn finite_range_entropy_respects_min_cut(seed in any::<u64>(), z_xi in 0usize..3) {
        let m = build_finite_range_mera(16, z_xi, 1, 2, seed).unwrap();
        for row in entropy_saturation(&m, &[2, 4, 8]).unwrap() {
            prop_assert!(row.entropy.unwrap() <= row.min_cut_weight + 1e-9);
        }
    }
}
