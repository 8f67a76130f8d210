use blendopt::centralized::{solve_bracket_oracle, solve_centralized_fixed_penalty};
use blendopt::decentralized::{check_bilevel_feasibility, gap_record, heuristic_solve, lower_bound_relaxation};
use blendopt::sampling::sample_scenarios;
use proptest::prelude::*;

mod common;

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn heuristic_incumbents_are_feasible_and_bounded(
        seed in any::<u64>(), suppliers in 1usize..4, brackets in 1usize..3, lambda in 1.0..300.0f64, mu in 1.0..300.0f64,
    ) {
        let inst = common::random_instance(seed, common::Dims { suppliers, biomass: 2, brackets }, 0.2, 0.1);
        let scen = sample_scenarios(&inst, 6, seed).unwrap();
        let out = heuristic_solve(&inst, &scen, lambda, mu, 5).unwrap();
        let incumbents: Vec<f64> = out.trace.iter().filter_map(|s| s.incumbent).collect();
        for w in incumbents.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        let best = out.incumbent.expect("some price clears the ladder");
        prop_assert_eq!(Some(best.leader_objective), incumbents.last().copied());
        check_bilevel_feasibility(&inst, &scen, &best).unwrap();

        let bound = lower_bound_relaxation(&inst, &scen, lambda, mu, 100_000).unwrap();
        let tol = 1e-7 * (1.0 + best.leader_objective.abs());
        prop_assert!(bound.value <= best.leader_objective + tol, "bound {} above heuristic {}", bound.value, best.leader_objective);

        let central = solve_centralized_fixed_penalty(&inst, &scen, lambda, mu).unwrap();
        let gap = gap_record(&inst, &central, &best);
        prop_assert!(gap.ordered, "UB {} vs dec {} + {}", gap.centralized_upper, gap.decentralized, gap.delta_max);
        prop_assert!(gap.corrected_percent_gap >= -1e-7);
        if suppliers <= 2 && brackets <= 2 {
            let (exact, _) = solve_bracket_oracle(&inst, &scen, lambda, mu).unwrap().unwrap();
            prop_assert!(exact <= best.leader_objective + tol);
        }
    }
}
