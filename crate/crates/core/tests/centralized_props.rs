use blendopt::centralized::{
    saa_binary_search, solve_bracket_oracle, solve_centralized_fixed_penalty, solve_centralized_hard, SearchOptions,
};
use blendopt::sampling::sample_scenarios;
use proptest::prelude::*;

mod common;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn bounds_bracket_the_gap(seed in any::<u64>(), lambda in 0.0..500.0f64, mu in 0.0..500.0f64) {
        let inst = common::random_instance(seed, common::Dims { suppliers: 3, biomass: 2, brackets: 3 }, 0.2, 0.1);
        let scen = sample_scenarios(&inst, 8, seed).unwrap();
        let r = solve_centralized_fixed_penalty(&inst, &scen, lambda, mu).unwrap();
        prop_assert!(r.lower_bound <= r.upper_bound + 1e-9 * r.upper_bound.abs());
        prop_assert!(rel(r.upper_bound - r.lower_bound, r.delta) <= 1e-6 * (1.0 + r.upper_bound.abs()));
        prop_assert!(r.delta <= inst.max_outer_gap() + 1e-9);
        r.solution.check_bracket_invariants(&inst, 1e-9).unwrap();
    }

    #[test]
    fn relaxation_is_within_delta_max_of_the_exact_model(seed in any::<u64>(), lambda in 0.0..300.0f64, mu in 0.0..300.0f64) {
        let inst = common::random_instance(seed, common::Dims { suppliers: 2, biomass: 2, brackets: 2 }, 0.2, 0.1);
        let scen = sample_scenarios(&inst, 3, seed).unwrap();
        let r = solve_centralized_fixed_penalty(&inst, &scen, lambda, mu).unwrap();
        let (exact, _) = solve_bracket_oracle(&inst, &scen, lambda, mu).unwrap().unwrap();
        let diff = r.upper_bound - exact;
        let tol = 1e-7 * (1.0 + exact.abs());
        prop_assert!(diff >= -tol, "UB {} below exact {}", r.upper_bound, exact);
        prop_assert!(diff <= inst.max_outer_gap() + tol);
        prop_assert!(r.lower_bound <= exact + tol);
    }

    #[test]
    // The penalty sees total excess, not how many scenarios carry it, so only
    // the total is monotone: the count can go 6 -> 7 while the sum falls.
    fn more_ash_penalty_never_adds_excess(seed in any::<u64>(), mu in 0.0..200.0f64) {
        let inst = common::random_instance(seed, common::Dims { suppliers: 3, biomass: 2, brackets: 2 }, 0.2, 0.1);
        let scen = sample_scenarios(&inst, 10, seed).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1.0, 5.0, 25.0, 100.0, 400.0, 2000.0] {
            let r = solve_centralized_fixed_penalty(&inst, &scen, lambda, mu).unwrap();
            let excess: f64 = r.solution.slacks.ash_excess.iter().sum();
            prop_assert!(excess <= last + 1e-7 * (1.0 + last), "excess rose to {} at lambda {}", excess, lambda);
            last = excess;
        }
    }

    #[test]
    fn zero_inner_risk_search_violates_nothing(seed in any::<u64>()) {
        let inst = common::random_instance(seed, common::Dims { suppliers: 3, biomass: 2, brackets: 2 }, 0.2, 0.0);
        let scen = sample_scenarios(&inst, 12, seed).unwrap();
        prop_assume!(solve_centralized_hard(&inst, &scen).unwrap().is_some());
        let out = saa_binary_search(&inst, &scen, 0.0, 0.0, &SearchOptions::default()).unwrap();
        prop_assert_eq!(out.targets, (0, 0));
        prop_assert_eq!(out.result.violations, (0, 0));
        let chosen = out.trace.iter().filter(|s| s.within_targets).map(|s| s.deterministic_cost).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(chosen, out.result.deterministic_cost());
    }
}

#[test]
fn single_scenario_hard_solve_matches_zero_risk_search() {
    let inst = common::random_instance(11, common::Dims { suppliers: 2, biomass: 2, brackets: 2 }, 0.2, 0.0);
    let scen = sample_scenarios(&inst, 1, 11).unwrap();
    let hard = solve_centralized_hard(&inst, &scen).unwrap().unwrap();
    let searched = saa_binary_search(&inst, &scen, 0.0, 0.0, &SearchOptions::default()).unwrap();
    assert_eq!(searched.result.violations, (0, 0));
    let (a, b) = (hard.lower_bound, searched.result.lower_bound);
    assert!(rel(a, b) <= 1e-6, "hard {a} vs searched {b}");
}
