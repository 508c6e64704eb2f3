//! Cross-module invariants on random small instances.

use proptest::prelude::*;

use fpp_core::capacity::{sample_field, TwoPointDist};
use fpp_core::flow::LatticeFlow;
use fpp_core::lattice::{boundary_sets, CylinderSpec, LatticeIndex};
use fpp_core::lipschitz::{is_lipschitz, lipschitz_cost, sample_vertex_weights, solve_lipschitz};
use fpp_core::oracle::{enumerate_min_cuts, EnumerationGuard};
use fpp_core::penalized::{penalized_minimum, penalty_profile, PenaltyParams};
use fpp_core::surface::{chimney_scan, is_bottom_top_cut};

fn dist_strategy() -> impl Strategy<Value = TwoPointDist> {
    (1u64..4, 1u64..4, 1u64..8).prop_map(|(a, gap, p)| TwoPointDist::new(a, a + gap, p, 8).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_sets_are_nested(d in 2usize..4, n in 1usize..4, h in 1usize..6, dist in dist_strategy(), seed in 0u64..1000) {
        let lattice = LatticeIndex::new(CylinderSpec::new(d, n, h).unwrap()).unwrap();
        let field = sample_field(&lattice, dist, seed, 0);
        let mut solver = LatticeFlow::bottom_top(&lattice);
        let phi = solver.solve(&field.values);
        let cut = solver.canonical_cut();
        prop_assert_eq!(cut.capacity, phi);
        prop_assert!(is_bottom_top_cut(&lattice, &cut.edges));
        let essential = solver.essential();
        let pivotal = solver.pivotal(dist.low(), dist.high());
        prop_assert!(essential.iter().all(|e| cut.contains(*e)));
        prop_assert!(essential.iter().all(|e| pivotal.contains(e)));
        for e in 0..lattice.num_edges() {
            prop_assert!(solver.value_if(e, dist.high()) >= solver.value_if(e, dist.low()));
        }
    }

    #[test]
    fn enumeration_agrees_with_flow(n in 0usize..3, h in 1usize..4, dist in dist_strategy(), seed in 0u64..1000) {
        let lattice = LatticeIndex::new(CylinderSpec::new(2, n, h).unwrap()).unwrap();
        prop_assume!(lattice.num_edges() <= 16);
        let field = sample_field(&lattice, dist, seed, 1);
        let (b, t) = boundary_sets(&lattice.spec());
        let cuts = enumerate_min_cuts(&lattice, &field.values, &b, &t, &EnumerationGuard::default()).unwrap();
        let mut solver = LatticeFlow::bottom_top(&lattice);
        let phi = solver.solve(&field.values);
        prop_assert!(cuts.iter().all(|c| c.capacity == phi));
        let canonical = solver.canonical_cut();
        prop_assert!(cuts.iter().any(|c| c.edges == canonical.edges));
        for e in solver.essential() {
            prop_assert!(cuts.iter().all(|c| c.contains(e)));
        }
    }

    #[test]
    fn penalized_minimum_properties(n in 2usize..6, dist in dist_strategy(), seed in 0u64..1000, slab in 1usize..8) {
        let spec = CylinderSpec::new(2, n, 4 * n).unwrap();
        let lattice = LatticeIndex::new(spec).unwrap();
        let params = PenaltyParams::new(0.1, 0.2, slab.min(spec.height)).unwrap();
        let field = sample_field(&lattice, dist, seed, 2);
        let phi = LatticeFlow::bottom_top(&lattice).solve(&field.values);
        let profile = penalty_profile(&params, &spec, &dist, seed, 2).unwrap();
        let out = penalized_minimum(&lattice, &field, &profile, &params).unwrap();
        prop_assert!(out.x.iter().all(|&x| x >= phi));
        prop_assert!(dist.low() * out.cut.len() as i64 <= dist.high() * (n as i64 + 1));
        prop_assert_eq!(&penalized_minimum(&lattice, &field, &profile, &params).unwrap(), &out);
    }

    #[test]
    fn canonical_cuts_pass_chimney_scan(d in 2usize..4, n in 1usize..4, h in 2usize..8, dist in dist_strategy(), seed in 0u64..1000) {
        let lattice = LatticeIndex::new(CylinderSpec::new(d, n, h).unwrap()).unwrap();
        let field = sample_field(&lattice, dist, seed, 3);
        let mut solver = LatticeFlow::bottom_top(&lattice);
        solver.solve(&field.values);
        let scan = chimney_scan(&lattice, &field, &solver.canonical_cut().edges).unwrap();
        prop_assert!(scan.violations().is_empty(), "{:?}", scan.violations());
    }

    #[test]
    fn lipschitz_optimum_is_feasible_and_monotone(n in 1usize..4, h in 1usize..5, dist in dist_strategy(), seed in 0u64..1000, v in 0usize..64) {
        let lattice = LatticeIndex::new(CylinderSpec::new(2, n, h).unwrap()).unwrap();
        let mut w = sample_vertex_weights(&lattice, dist, seed, 4);
        let (value, psi) = solve_lipschitz(&lattice, &w).unwrap();
        prop_assert!(is_lipschitz(&lattice, &psi));
        prop_assert_eq!(lipschitz_cost(&w, &psi), value);
        let v = v % w.weights.len();
        w.weights[v] = dist.low();
        prop_assert!(solve_lipschitz(&lattice, &w).unwrap().0 <= value);
    }
}
