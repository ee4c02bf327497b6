//! Strategies and properties shared by the property tests and the acceptance run.

use std::collections::HashMap;

use blowup::interval::Interval;
use blowup::series::Series;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        -1.0f64..1.0,
        (-1e-3f64..1e-3).prop_map(|x| x * 1e-9),
        Just(0.0),
    ]
}

pub fn interval() -> impl Strategy<Value = Interval> {
    (value(), value()).prop_map(|(a, b)| Interval::from_bounds(a.min(b), a.max(b)))
}

/// An interval together with a sub-interval and a point of the sub-interval.
pub fn nested() -> impl Strategy<Value = (Interval, Interval, f64)> {
    (interval(), 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(x, a, b, c)| {
        let p = x.lo() + a * (x.hi() - x.lo());
        let q = x.lo() + b * (x.hi() - x.lo());
        let inner = Interval::from_bounds(p.min(q), p.max(q));
        let pt = (inner.lo() + c * (inner.hi() - inner.lo())).clamp(inner.lo(), inner.hi());
        (x, inner, pt)
    })
}

pub fn encloses(iv: Interval, q: &BigRational) -> bool {
    exact(iv.lo()) <= *q && *q <= exact(iv.hi())
}

pub type Terms = HashMap<Vec<u32>, i64>;

pub fn monomials(m: usize, deg: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; m];
    fn rec(k: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[k] = e as u32;
            rec(k + 1, left - e, cur, out);
        }
    }
    rec(0, deg, &mut cur, &mut out);
    out
}

pub fn brute_product(a: &Terms, b: &Terms, deg: usize) -> Terms {
    let mut out = Terms::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            if e.iter().sum::<u32>() as usize <= deg {
                *out.entry(e).or_default() += ca * cb;
            }
        }
    }
    out
}

pub fn to_series(m: usize, deg: usize, t: &Terms) -> Series {
    let mut s = Series::zeros(m, deg);
    for (e, &c) in t {
        s.set(e, Interval::point(c as f64));
    }
    s
}

pub fn case() -> impl Strategy<Value = (usize, usize, usize, Terms, Terms)> {
    (1usize..=3, 0usize..=6, 0usize..=6).prop_flat_map(|(m, da, db)| {
        let ma = monomials(m, da);
        let mb = monomials(m, db);
        (
            Just(m),
            Just(da),
            Just(db),
            proptest::collection::vec(-50i64..=50, ma.len()).prop_map(move |v| ma.iter().cloned().zip(v).collect()),
            proptest::collection::vec(-50i64..=50, mb.len()).prop_map(move |v| mb.iter().cloned().zip(v).collect()),
        )
    })
}

pub fn binary_ops((x, xs, a): (Interval, Interval, f64), (y, ys, b): (Interval, Interval, f64)) -> Result<(), TestCaseError> {
    let pairs = [(xs + ys, x + y), (xs - ys, x - y), (xs * ys, x * y)];
    for (small, big) in pairs {
        prop_assert!(small.subset_of(&big), "{small} not in {big}");
    }
    let (qa, qb) = (exact(a), exact(b));
    prop_assert!(encloses(xs + ys, &(&qa + &qb)));
    prop_assert!(encloses(xs - ys, &(&qa - &qb)));
    prop_assert!(encloses(xs * ys, &(&qa * &qb)));
    if !y.contains_zero() {
        let (small, big) = (xs.checked_div(ys).unwrap(), x.checked_div(y).unwrap());
        prop_assert!(small.subset_of(&big));
        prop_assert!(!qb.is_zero());
        prop_assert!(encloses(small, &(&qa / &qb)));
    }
    Ok(())
}

pub fn unary_ops((x, xs, a): (Interval, Interval, f64), k: u32) -> Result<(), TestCaseError> {
    prop_assert!(xs.sqr().subset_of(&x.sqr()));
    prop_assert!(xs.abs().subset_of(&x.abs()));
    prop_assert!((-xs).subset_of(&-x));
    prop_assert!(xs.int_pow(k).subset_of(&x.int_pow(k)));
    let qa = exact(a);
    prop_assert!(encloses(xs.sqr(), &(&qa * &qa)));
    let mut p = BigRational::from_integer(1.into());
    for _ in 0..k {
        p *= &qa;
    }
    prop_assert!(encloses(xs.int_pow(k), &p));
    if x.lo() >= 0.0 {
        let (small, big) = (xs.sqrt().unwrap(), x.sqrt().unwrap());
        prop_assert!(small.subset_of(&big));
        let (lo, hi) = (exact(small.lo()), exact(small.hi()));
        prop_assert!(&lo * &lo <= qa);
        prop_assert!(&hi * &hi >= qa);
    }
    Ok(())
}

pub fn cauchy_product((m, da, db, a, b): (usize, usize, usize, Terms, Terms)) -> Result<(), TestCaseError> {
    let (sa, sb) = (to_series(m, da, &a), to_series(m, db, &b));
    let full = sa.mul(&sb);
    prop_assert_eq!(full.degree(), da + db);
    prop_assert_eq!(full.tail(), 0.0);
    let oracle = brute_product(&a, &b, da + db);
    for e in monomials(m, da + db) {
        let want = *oracle.get(&e).unwrap_or(&0) as f64;
        let got = full.get(&e);
        prop_assert_eq!((got.lo(), got.hi()), (want, want), "alpha {:?}", e);
    }
    Ok(())
}

/// Runs `cases` deterministic cases; the error names the first counterexample.
pub fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}
