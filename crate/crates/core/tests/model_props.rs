use blendopt::model::{BlendSolution, Bracket, ScenarioSlacks, SupplyCurve};
use proptest::prelude::*;
use rand::Rng;

mod common;

fn curve(seed: u64, brackets: usize) -> SupplyCurve {
    common::random_curve(&mut common::rng(seed), brackets)
}

/// Points across the whole domain, including every breakpoint.
fn grid(c: &SupplyCurve, per_bracket: usize) -> Vec<f64> {
    let mut xs = vec![0.0];
    for b in c.brackets() {
        for k in 1..=per_bracket {
            xs.push(b.lower + (b.upper - b.lower) * k as f64 / per_bracket as f64);
        }
    }
    xs
}

proptest! {
    #[test]
    fn outer_cost_is_a_lower_envelope(seed in any::<u64>(), n in 1usize..6) {
        let c = curve(seed, n);
        for x in grid(&c, 7) {
            let purchase = c.purchase_cost(x).unwrap();
            let outer = c.outer_cost(x).unwrap();
            let p = c.bracket_of(x);
            let gap = purchase - outer;
            prop_assert!(gap >= -1e-9 * (1.0 + purchase));
            prop_assert!((gap - c.bracket_gap(p)).abs() <= 1e-9 * (1.0 + purchase));
            if p == 0 {
                prop_assert_eq!(purchase, outer);
            } else {
                prop_assert!(c.bracket_gap(p) > 0.0);
            }
        }
        prop_assert_eq!(c.outer_cost(0.0).unwrap(), 0.0);
    }

    #[test]
    fn outer_cost_is_convex(seed in any::<u64>(), n in 1usize..6, pairs in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 20)) {
        let c = curve(seed, n);
        let s = c.availability();
        for (u, v) in pairs {
            let (x, y) = (u * s, v * s);
            let mid = c.outer_cost(0.5 * (x + y)).unwrap();
            let chord = 0.5 * (c.outer_cost(x).unwrap() + c.outer_cost(y).unwrap());
            prop_assert!(mid <= chord + 1e-9 * (1.0 + chord));
        }
    }

    #[test]
    fn outer_cost_is_continuous_at_breakpoints(seed in any::<u64>(), n in 2usize..6) {
        let c = curve(seed, n);
        let offsets = c.outer_offsets();
        for p in 1..c.len() {
            let prev = &c.brackets()[p - 1];
            let left = offsets[p - 1] + prev.price * (prev.upper - prev.lower);
            let b = &c.brackets()[p];
            let right = offsets[p] + b.price * (b.lower - b.lower);
            prop_assert_eq!(left, right);
        }
    }

    #[test]
    fn purchase_cost_is_monotone(seed in any::<u64>(), n in 1usize..6) {
        let c = curve(seed, n);
        let xs = grid(&c, 11);
        for w in xs.windows(2) {
            prop_assert!(c.purchase_cost(w[0]).unwrap() <= c.purchase_cost(w[1]).unwrap());
        }
    }

    #[test]
    fn lift_then_flatten_is_identity(seed in any::<u64>(), suppliers in 1usize..4, biomass in 1usize..3, brackets in 1usize..4) {
        let inst = common::random_instance(seed, common::Dims { suppliers, biomass, brackets }, 0.2, 0.1);
        let mut rng = common::rng(seed ^ 0x5eed);
        let q: Vec<f64> = inst
            .lots()
            .iter()
            .map(|lot| match rng.gen_range(0..4) {
                0 => 0.0,
                1 => lot.curve.brackets()[rng.gen_range(0..lot.curve.len())].upper,
                _ => rng.gen_range(0.0..lot.curve.availability()),
            })
            .collect();
        let purchases = BlendSolution::lift(&inst, &q, 1e-9).unwrap();
        let sol = BlendSolution {
            purchases,
            slacks: ScenarioSlacks::from_activities(&[0.5, -0.25], &[-1.0, 2.0]),
            objective: 0.0,
            cost_breakdown: Default::default(),
        };
        prop_assert_eq!(&sol.flatten(), &q);
        sol.check_bracket_invariants(&inst, 0.0).unwrap();
        for (k, lot) in inst.lots().iter().enumerate() {
            let chosen = (0..lot.curve.len()).filter(|&p| sol.indicator(k, p)).count();
            prop_assert_eq!(chosen, 1);
            let total: f64 = (0..lot.curve.len()).map(|p| sol.quantity(k, p)).sum();
            prop_assert_eq!(total, q[k]);
        }
    }
}

#[test]
fn boundary_belongs_to_the_cheaper_bracket() {
    let c = SupplyCurve::new(vec![
        Bracket { lower: 0.0, upper: 100.0, price: 10.0 },
        Bracket { lower: 100.0, upper: 250.0, price: 12.0 },
    ])
    .unwrap();
    assert_eq!(c.bracket_of(100.0), 0);
    assert_eq!(c.purchase_cost(100.0).unwrap(), 1000.0);
    assert_eq!(c.bracket_of(100.5), 1);
    assert_eq!(c.bracket_gap(1), 12.0 * 100.0 - 1000.0);
    assert!(c.purchase_cost(250.1).is_err());
}

#[test]
fn noise_past_a_breakpoint_snaps_back() {
    let inst = common::random_instance(7, common::Dims { suppliers: 1, biomass: 1, brackets: 3 }, 0.2, 0.1);
    let first = inst.lots()[0].curve.brackets()[0].upper;
    let snapped = BlendSolution::snap_to_breakpoints(&inst, &[first * (1.0 + 1e-9)], 1e-6);
    assert_eq!(snapped, vec![first]);
    let lifted = BlendSolution::lift(&inst, &snapped, 1e-6).unwrap();
    assert_eq!(lifted[0].bracket, 0);
    assert_eq!(BlendSolution::snap_to_breakpoints(&inst, &[-1e-9], 1e-6), vec![0.0]);
    let inside = 0.5 * first;
    assert_eq!(BlendSolution::snap_to_breakpoints(&inst, &[inside], 1e-6), vec![inside]);
}
