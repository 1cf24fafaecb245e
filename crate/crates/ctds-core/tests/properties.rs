//! Randomized property tests over the public API.

use ctds_core::analysis::{cluster_solutions, survival_points};
use ctds_core::dynamics::CtdsSystem;
use ctds_core::formula::{
    dpll_solve, parse_dimacs, write_dimacs, Assignment, Clause, CnfFormula, DpllResult, Literal,
};
use ctds_core::generators::{parse_xor, write_xor, XorInstance};
use proptest::prelude::*;

/// A random CNF over `n` variables with clause lengths in [1, k_max].
fn arb_formula(n: usize, m_max: usize, k_max: usize) -> impl Strategy<Value = CnfFormula> {
    let clause = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=k_max.min(n))
        .prop_flat_map(|vars| {
            let len = vars.len();
            (Just(vars), proptest::collection::vec(any::<bool>(), len))
        })
        .prop_map(|(vars, signs)| {
            Clause::new(
                vars.into_iter()
                    .zip(signs)
                    .map(|(v, neg)| Literal::new(v, neg))
                    .collect(),
            )
            .unwrap()
        });
    proptest::collection::vec(clause, 1..=m_max)
        .prop_map(move |clauses| CnfFormula::new(n, clauses).unwrap())
}

fn arb_state(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..=1.0, n)
}

fn brute_force_sat(f: &CnfFormula) -> bool {
    (0..1u32 << f.num_vars).any(|bits| {
        let a = Assignment(
            (0..f.num_vars)
                .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        );
        f.evaluate(&a).unwrap().0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constraint_values_stay_in_unit_interval(
        f in arb_formula(8, 12, 5),
        s in arb_state(8),
    ) {
        let sys = CtdsSystem::new(&f);
        for m in 0..f.num_clauses() {
            let k = sys.constraint_value(&s, m).unwrap();
            prop_assert!((0.0..=1.0).contains(&k), "K_{m} = {k}");
        }
    }

    #[test]
    fn energy_zero_iff_rounded_satisfies_at_corners(
        f in arb_formula(8, 12, 5),
        bits in any::<u8>(),
    ) {
        let s: Vec<f64> = (0..8).map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let sys = CtdsSystem::new(&f);
        let spins: Vec<i8> = s.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect();
        let a = Assignment(spins);
        let (sat, _) = f.evaluate(&a).unwrap();
        prop_assert_eq!(sys.energy_e(&s) == 0.0, sat);
    }

    #[test]
    fn dimacs_round_trip(f in arb_formula(10, 15, 4)) {
        let text = write_dimacs(&f);
        let parsed = parse_dimacs(&text).unwrap();
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn xor_round_trip(
        checks in proptest::collection::vec(
            (proptest::sample::subsequence((0..9usize).collect::<Vec<_>>(), 2..=4), any::<bool>()),
            1..8,
        ),
    ) {
        let instance = XorInstance {
            num_vars: 9,
            checks: checks.into_iter().map(|(v, p)| (v, p as u8)).collect(),
        };
        let parsed = parse_xor(&write_xor(&instance)).unwrap();
        prop_assert_eq!(parsed, instance);
    }

    #[test]
    fn dpll_agrees_with_brute_force(f in arb_formula(9, 20, 4)) {
        match dpll_solve(&f, u64::MAX) {
            DpllResult::Sat(witness) => {
                prop_assert!(f.evaluate(&witness).unwrap().0);
            }
            DpllResult::Unsat => prop_assert!(!brute_force_sat(&f)),
            DpllResult::BudgetExceeded => prop_assert!(false, "unbounded budget exceeded"),
        }
    }

    #[test]
    fn rhs_points_inward_on_faces(
        f in arb_formula(6, 10, 4),
        s in arb_state(6),
        face in 0usize..6,
        side in any::<bool>(),
    ) {
        // pin one coordinate to a face of the hypercube; the flow component
        // on that coordinate never points outward
        let mut s = s;
        s[face] = if side { 1.0 } else { -1.0 };
        let sys = CtdsSystem::new(&f);
        let mut ds = vec![0.0; 6];
        let mut dlog_a = vec![0.0; f.num_clauses()];
        let log_a = vec![0.0; f.num_clauses()];
        sys.rhs(&s, &log_a, &mut ds, &mut dlog_a).unwrap();
        if side {
            prop_assert!(ds[face] <= 1e-12, "outflow at +1: {}", ds[face]);
        } else {
            prop_assert!(ds[face] >= -1e-12, "outflow at -1: {}", ds[face]);
        }
    }

    #[test]
    fn clustering_is_order_invariant(
        mut sols in proptest::collection::vec(
            proptest::collection::vec(prop_oneof![Just(-1i8), Just(1i8)], 6),
            1..12,
        ),
        perm_seed in any::<u64>(),
    ) {
        let assignments: Vec<Assignment> = sols.drain(..).map(Assignment).collect();
        let a = cluster_solutions(&assignments);
        let mut shuffled = assignments.clone();
        // deterministic Fisher-Yates from the seed
        let mut state = perm_seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let j = (state >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        let b = cluster_solutions(&shuffled);
        prop_assert_eq!(a.num_clusters, b.num_clusters);
        for sol in &assignments {
            let ca = a.cluster_of(sol).unwrap();
            let cb = b.cluster_of(sol).unwrap();
            // ids may differ; partition must not
            for other in &assignments {
                prop_assert_eq!(
                    a.cluster_of(other).unwrap() == ca,
                    b.cluster_of(other).unwrap() == cb
                );
            }
        }
    }

    #[test]
    fn survival_is_a_decreasing_probability(
        events in proptest::collection::vec(0.0f64..100.0, 1..200),
        extra in 0usize..50,
    ) {
        let total = events.len() + extra;
        let pts = survival_points(&events, total);
        let mut prev = 1.0;
        for &(x, p) in &pts {
            prop_assert!(x.is_finite());
            prop_assert!(p > 0.0 && p < 1.0);
            prop_assert!(p <= prev + 1e-12);
            prev = p;
        }
    }

    #[test]
    fn substreams_are_deterministic(seed in any::<u64>(), idx in 0u64..1000) {
        use rand::RngCore;
        let a = ctds_core::rng::substream(seed, idx).next_u64();
        let b = ctds_core::rng::substream(seed, idx).next_u64();
        prop_assert_eq!(a, b);
    }
}
