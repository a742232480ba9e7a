//! The float binomial tail held against an exact-rational oracle.

use atbat_mdp::exploit::binomial_tail_pvalue;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// All upper tails P(X > m), m = 0..=n, computed in exact rational
/// arithmetic from the exact binary value of p.
fn exact_tails(n: u64, p: f64) -> Vec<f64> {
    let p = BigRational::from_float(p).expect("finite probability");
    let q = BigRational::one() - &p;
    let mut terms: Vec<BigRational> = Vec::with_capacity(n as usize + 1);
    let mut coefficient = BigInt::one();
    for i in 0..=n {
        if i > 0 {
            coefficient = coefficient * BigInt::from(n - i + 1) / BigInt::from(i);
        }
        let term = BigRational::from(coefficient.clone())
            * pow_rational(&p, i)
            * pow_rational(&q, n - i);
        terms.push(term);
    }
    // tails[m] = sum of terms i = m+1 ..= n, accumulated exactly.
    let mut suffix = BigRational::zero();
    let mut tails = vec![0.0f64; n as usize + 1];
    for m in (0..=n as usize).rev() {
        if (m as u64) < n {
            suffix += terms[m + 1].clone();
        }
        tails[m] = suffix.to_f64().expect("tail fits in f64");
    }
    tails
}

fn pow_rational(base: &BigRational, exp: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut base = base.clone();
    let mut exp = exp;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        exp >>= 1;
    }
    acc
}

fn assert_close(n: u64, m: u64, p: f64, got: f64, want: f64) {
    let tolerance = 1e-12 * want.abs().max(f64::MIN_POSITIVE);
    assert!(
        (got - want).abs() <= tolerance || (got - want).abs() <= 1e-300,
        "n={n} m={m} p={p}: got {got:e}, oracle {want:e}"
    );
}

#[test]
fn tails_match_the_rational_oracle() {
    for n in [1u64, 2, 5, 10, 25, 60] {
        for p in [0.25, 0.5, 0.75] {
            let oracle = exact_tails(n, p);
            for m in 0..=n {
                let got = binomial_tail_pvalue(n, m, p);
                assert_close(n, m, p, got, oracle[m as usize]);
            }
        }
    }
}

#[test]
fn population_scale_tail() {
    let oracle = exact_tails(150, 0.5);
    let got = binomial_tail_pvalue(150, 87, 0.5);
    assert_close(150, 87, 0.5, got, oracle[87]);
    // Frozen from exact rational arithmetic.
    assert!((got - 0.020434246933246965).abs() < 1e-14);
}
