use num_rational::BigRational;
use proptest::prelude::*;
use visitprob::numerics::ln_ratio;
use visitprob::{
    convert, pow_prob, sum_values, swap_labels, visit_distribution, visit_probability, ChainSpec, NumericMode,
    ProbValue, State, VisitQuery,
};

fn ulp(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1) - x
}

fn rational() -> impl Strategy<Value = (i64, i64)> {
    (1i64..=64).prop_flat_map(|d| (0..=d, Just(d)))
}

proptest! {
    #[test]
    fn float_sum_error_bound(xs in prop::collection::vec(0u64..(1 << 53), 1..200), exp in 0i32..60) {
        let scale = 2f64.powi(-53 - exp);
        let values: Vec<f64> = xs.iter().map(|&x| x as f64 * scale).collect();
        let terms: Vec<ProbValue> = values.iter().map(|&x| ProbValue::Float(x)).collect();
        let exact: BigRational = values.iter().map(|&x| BigRational::from_float(x).unwrap()).sum();
        let s = visitprob::numerics::ratio_to_f64(&exact);
        let got = sum_values(NumericMode::Float, &terms).unwrap().to_f64();
        prop_assert!((got - s).abs() <= 4.0 * ulp(s) * values.len() as f64);
    }

    #[test]
    fn log_sum_error_bound(xs in prop::collection::vec(1u64..1_000_000, 1..500), shift in 6u32..900) {
        // Probabilities x_i * 10^-(shift), x_i < 10^6, kept as rationals; the log backend
        // sees only their logs.
        let den = num_traits::pow(num_bigint::BigInt::from(10), shift as usize);
        let ratios: Vec<BigRational> = xs.iter().map(|&x| BigRational::new(x.into(), den.clone())).collect();
        let terms: Vec<ProbValue> = ratios.iter().map(|r| ProbValue::from_ln(ln_ratio(r)).unwrap()).collect();
        let exact: BigRational = ratios.iter().sum();
        let got = sum_values(NumericMode::LogSpace, &terms).unwrap().ln();
        // |exp(result) - s| <= 1e-12 s, compared in the log domain.
        prop_assert!((got - ln_ratio(&exact)).abs() <= 1e-12);
    }

    #[test]
    fn exact_power_is_additive((n, d) in rational(), a in 0u64..30, b in 0u64..30) {
        let p = ProbValue::exact(n, d).unwrap();
        prop_assert_eq!(pow_prob(&p, a + b), pow_prob(&p, a).checked_mul(&pow_prob(&p, b)).unwrap());
    }

    #[test]
    fn dyadic_round_trip(num in 0u64..(1 << 40), bits in 40u32..60) {
        let r = BigRational::new(num.into(), num_bigint::BigInt::from(1u64) << bits);
        let x = ProbValue::Exact(r);
        prop_assert_eq!(convert(&convert(&x, NumericMode::Float), NumericMode::Exact), x);
    }

    #[test]
    fn swap_is_an_involution(a in rational(), b in rational(), c in rational()) {
        let chain = ChainSpec::exact(a, b, c).unwrap();
        prop_assert_eq!(swap_labels(&swap_labels(&chain)), chain);
    }

    #[test]
    fn normalization_and_symmetries(a in rational(), b in rational(), c in rational(), n in 1usize..40) {
        let chain = ChainSpec::exact(a, b, c).unwrap();
        let d = visit_distribution(n, State::S1, &chain).unwrap();
        prop_assert_eq!(d.total(), ProbValue::one(NumericMode::Exact));
        let swapped = swap_labels(&chain);
        for k in 0..=n {
            let s1 = visit_probability(&VisitQuery::new(n, k, State::S1).unwrap(), &chain).unwrap();
            let s0_swapped = visit_probability(&VisitQuery::new(n, k, State::S0).unwrap(), &swapped).unwrap();
            prop_assert_eq!(&s1, &s0_swapped);
            prop_assert_eq!(&s1, d.get(k).unwrap());
        }
    }

    #[test]
    fn float_agrees_with_exact(a in 1i64..100, b in 1i64..100, c in 1i64..100, n in 1usize..200) {
        let exact = ChainSpec::exact((a, 100), (b, 100), (c, 100)).unwrap();
        let float = exact.to_mode(NumericMode::Float);
        let e = visit_distribution(n, State::S1, &exact).unwrap().to_f64_vec();
        let f = visit_distribution(n, State::S1, &float).unwrap().to_f64_vec();
        for (x, y) in e.iter().zip(&f) {
            if x.is_normal() {
                prop_assert!((x - y).abs() <= 1e-10 * x, "{} vs {}", x, y);
            } else {
                // Below the normal range only absolute agreement is possible.
                prop_assert!((x - y).abs() <= f64::MIN_POSITIVE);
            }
        }
    }
}
