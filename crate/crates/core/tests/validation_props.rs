use blendopt::validation::{
    binomial_cdf, normal_cdf, normal_quantile, order_statistic_index, upper_confidence_limit,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

/// Exact sum over i <= k of C(n, i) p^i (1 - p)^(n - i), with p taken as
/// the exact value of its binary representation.
fn exact_binomial(k: u64, p: f64, n: u64) -> BigRational {
    let p = BigRational::from_float(p).unwrap();
    let q = BigRational::one() - &p;
    let mut total = BigRational::zero();
    let mut choose = BigInt::one();
    for i in 0..=k {
        if i > 0 {
            choose = choose * BigInt::from(n - i + 1) / BigInt::from(i);
        }
        let term = BigRational::from_integer(choose.clone())
            * num_traits::pow(p.clone(), i as usize)
            * num_traits::pow(q.clone(), (n - i) as usize);
        total += term;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 400, ..ProptestConfig::default() })]

    #[test]
    fn binomial_cdf_matches_exact_summation(n in 0u64..=20, k_frac in 0.0..=1.0f64, p in 0.0..=1.0f64) {
        let k = ((n as f64) * k_frac).floor() as u64;
        let got = binomial_cdf(k, p, n).unwrap();
        let want = exact_binomial(k, p, n).to_f64().unwrap();
        prop_assert!((got - want).abs() <= 1e-12, "B({}; {}, {}) = {} vs {}", k, p, n, got, want);
    }

    #[test]
    fn quantile_inverts_the_cdf(q in 1e-10..(1.0 - 1e-10f64)) {
        let x = normal_quantile(q).unwrap();
        prop_assert!((normal_cdf(x) - q).abs() <= 1e-9 * q.min(1.0 - q).max(1e-3));
    }

    #[test]
    fn larger_check_samples_never_raise_the_limit(rate in 0.0..=1.0f64, n in 1usize..5000, extra in 1usize..5000, delta in 0.001..0.5f64) {
        let a = upper_confidence_limit(rate, n, delta).unwrap();
        let b = upper_confidence_limit(rate, n + extra, delta).unwrap();
        prop_assert!(b <= a);
        prop_assert!(a >= rate);
    }

    #[test]
    fn order_statistic_index_respects_the_miss_probability(pi in 0.0..=1.0f64, m in 1usize..60, delta in 0.01..0.3f64) {
        match order_statistic_index(pi, m, delta).unwrap() {
            Some(t) => {
                prop_assert!((1..=m).contains(&t));
                prop_assert!(binomial_cdf(t as u64 - 1, pi, m as u64).unwrap() <= delta);
                if t < m {
                    prop_assert!(binomial_cdf(t as u64, pi, m as u64).unwrap() > delta);
                }
            }
            None => prop_assert!(binomial_cdf(0, pi, m as u64).unwrap() > delta),
        }
    }
}

#[test]
fn quantile_round_trip_at_common_levels() {
    for q in [0.8, 0.9, 0.95, 0.99] {
        let x = normal_quantile(q).unwrap();
        assert!((normal_cdf(x) - q).abs() <= 1e-9, "{q}");
    }
}
