mod common;

use common::brute_force_min;
use proptest::prelude::*;
use tfmp_core::bnb::{solve_ip, solve_ip_with, BranchOptions, IpStatus};
use tfmp_core::{ConstraintSystem, Rational, RowTag, Sense};

fn arb_binary_system() -> impl Strategy<Value = ConstraintSystem> {
    (1usize..=8, 1usize..=6)
        .prop_flat_map(|(n, m)| {
            let row = (prop::collection::vec(-2i64..=3, n), any::<bool>(), -1i64..=4);
            (Just(n), prop::collection::vec(row, m), prop::collection::vec(-6i64..=6, n))
        })
        .prop_map(|(n, rows, cost)| {
            let mut sys = ConstraintSystem::new(n);
            sys.objective = cost.into_iter().map(Rational::from_integer).collect();
            for (i, (coefs, le, rhs)) in rows.into_iter().enumerate() {
                let terms = coefs.into_iter().enumerate().map(|(c, a)| (c, Rational::from_integer(a))).collect();
                let sense = if le { Sense::Le } else { Sense::Ge };
                // Halves make fractional relaxations common.
                sys.add_row(terms, sense, Rational::new(2 * rhs + 1, 2), RowTag::Other(format!("r{i}")));
            }
            sys
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_exhaustive_search(sys in arb_binary_system()) {
        let ip = solve_ip(&sys).unwrap();
        match brute_force_min(&sys) {
            None => prop_assert_eq!(ip.status, IpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(ip.status, IpStatus::Optimal);
                prop_assert_eq!(ip.objective, best);
                prop_assert!(sys.is_feasible_binary(&ip.values));
                prop_assert_eq!(sys.objective_binary(&ip.values), best);
            }
        }
    }

    #[test]
    fn pruning_never_changes_the_answer(sys in arb_binary_system()) {
        let pruned = solve_ip(&sys).unwrap();
        let full = solve_ip_with(&sys, &BranchOptions { prune: false, ..BranchOptions::default() }).unwrap();
        prop_assert_eq!(pruned.status, full.status);
        if pruned.status == IpStatus::Optimal {
            prop_assert_eq!(pruned.objective, full.objective);
        }
        prop_assert!(pruned.nodes_explored <= full.nodes_explored);
    }

    #[test]
    fn bounds_sit_below_the_optimum(sys in arb_binary_system()) {
        let ip = solve_ip(&sys).unwrap();
        if ip.status == IpStatus::Optimal {
            let obj = *ip.objective.numer() as f64 / *ip.objective.denom() as f64;
            prop_assert!(ip.root_bound.unwrap() <= obj + 1e-7);
            prop_assert!(ip.min_node_bound <= obj + 1e-7);
            if ip.lp_was_integral {
                prop_assert!((ip.root_bound.unwrap() - obj).abs() <= 1e-7);
            }
        }
    }
}
