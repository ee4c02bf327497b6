mod common;

use blowup::interval::Interval;
use blowup::series::{exponents, Series};
use common::props::{brute_product, case, cauchy_product, monomials, to_series};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn cauchy_product_matches_brute_force(c in case()) {
        cauchy_product(c)?;
    }

    #[test]
    fn truncated_product_keeps_exact_head_and_bounds_the_rest((m, da, db, a, b) in case(), cut in 0usize..=6) {
        let (sa, sb) = (to_series(m, da, &a), to_series(m, db, &b));
        let t = sa.mul_trunc(&sb, cut);
        let deg = cut.min(da + db);
        prop_assert_eq!(t.degree(), deg);
        let oracle = brute_product(&a, &b, da + db);
        let mut dropped = 0.0;
        for (e, &c) in &oracle {
            let d = e.iter().sum::<u32>() as usize;
            if d <= deg {
                prop_assert!(t.get(e).contains(c as f64));
            } else {
                dropped += (c as f64).abs();
            }
        }
        prop_assert!(t.tail() >= dropped);
    }

    #[test]
    fn graded_lex_indexing_round_trips(m in 1usize..=4, deg in 0usize..=8) {
        let exps = exponents(m, deg);
        let all = monomials(m, deg);
        prop_assert_eq!(exps.len() / m, all.len());
        let mut s = Series::zeros(m, deg);
        for (k, e) in exps.chunks(m).enumerate() {
            s.set(e, Interval::point(k as f64));
        }
        for (k, v) in s.coeffs().iter().enumerate() {
            prop_assert_eq!(v.mid(), k as f64);
        }
        for w in exps.chunks(m).collect::<Vec<_>>().windows(2) {
            prop_assert!(w[0].iter().sum::<u32>() <= w[1].iter().sum::<u32>());
        }
    }
}
