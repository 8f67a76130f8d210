use blendopt::sampling::{empirical_violation_rates, lot_efficiencies, sample_scenarios, sample_scenarios_tagged, StreamTag};
use proptest::prelude::*;
use rand::Rng;

mod common;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn same_seed_same_scenarios(seed in any::<u64>(), n in 1usize..40) {
        let inst = common::random_instance(seed, common::Dims { suppliers: 3, biomass: 2, brackets: 2 }, 0.2, 0.1);
        let a = sample_scenarios(&inst, n, seed).unwrap();
        let b = sample_scenarios(&inst, n, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let other = sample_scenarios_tagged(&inst, n, seed, StreamTag::Validation).unwrap();
        prop_assert_ne!(a, other);
    }

    #[test]
    fn draws_stay_in_support(seed in any::<u64>(), n in 1usize..60) {
        let inst = common::random_instance(seed, common::Dims { suppliers: 2, biomass: 3, brackets: 1 }, 0.2, 0.1);
        let scen = sample_scenarios(&inst, n, seed).unwrap();
        for s in 0..n {
            for (k, lot) in inst.lots().iter().enumerate() {
                let bt = &inst.biomass()[lot.biomass];
                let (a, h) = (scen.ash(s, k), scen.heat(s, k));
                prop_assert!(bt.ash.min <= a && a <= bt.ash.max);
                prop_assert!(bt.heat.low <= h && h <= bt.heat.high);
            }
        }
    }

    #[test]
    fn rates_are_multiples_of_one_over_n(seed in any::<u64>(), n in 1usize..50) {
        let inst = common::random_instance(seed, common::Dims { suppliers: 2, biomass: 2, brackets: 2 }, 0.2, 0.1);
        let scen = sample_scenarios(&inst, n, seed).unwrap();
        let mut rng = common::rng(seed);
        let q: Vec<f64> = inst.lots().iter().map(|l| rng.gen_range(0.0..l.curve.availability())).collect();
        let r = inst.refinery();
        let (p1, p2) = empirical_violation_rates(&q, &scen, r.ash_limit, r.thermal_requirement, &lot_efficiencies(&inst)).unwrap();
        for p in [p1, p2] {
            prop_assert!((0.0..=1.0).contains(&p));
            let scaled = p * n as f64;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }
}

#[test]
fn empty_blend_fails_only_the_thermal_row() {
    let inst = common::random_instance(3, common::Dims { suppliers: 2, biomass: 2, brackets: 2 }, 0.2, 0.1);
    let scen = sample_scenarios(&inst, 25, 3).unwrap();
    let r = inst.refinery();
    let q = vec![0.0; inst.lots().len()];
    let rates = empirical_violation_rates(&q, &scen, r.ash_limit, r.thermal_requirement, &lot_efficiencies(&inst)).unwrap();
    assert_eq!(rates, (0.0, 1.0));
}
