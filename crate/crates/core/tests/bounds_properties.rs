use codesense::ensemble::exhaustive_moments;
use codesense::epsilon::rational_to_f64;
use codesense::ripbounds::{
    asymptotic_report, binary_entropy, binomial, binomial_prefix_sum,
    entropy_quadratic_bound_check, lemma4_lower_bound_exact, lemma5_upper_bound_exact,
    recovery_chain_holds, recovery_delta_threshold, theorem1_threshold, z_constant,
};
use codesense::Epsilon;
use num_bigint::BigUint;
use proptest::prelude::*;

fn pascal(n: usize) -> Vec<Vec<BigUint>> {
    let mut rows = vec![vec![BigUint::from(1u8)]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![BigUint::from(1u8); i + 1];
        for j in 1..i {
            row[j] = &prev[j - 1] + &prev[j];
        }
        rows.push(row);
    }
    rows
}

#[test]
fn binomials_match_pascal_triangle() {
    let tri = pascal(130);
    for (n, row) in tri.iter().enumerate() {
        let mut acc = BigUint::from(0u8);
        for (k, c) in row.iter().enumerate() {
            assert_eq!(&binomial(n as u64, k as u64), c);
            acc += c;
            assert_eq!(binomial_prefix_sum(n as u64, k as u64), acc);
        }
        assert_eq!(binomial(n as u64, n as u64 + 1), BigUint::from(0u8));
    }
}

proptest! {
    #[test]
    fn lemma4_is_nondecreasing_in_r(p in 2u64..300, r in 1u64..200, num in 1i64..100) {
        let e = Epsilon::from_ratio(num, 101).unwrap();
        prop_assert!(lemma4_lower_bound_exact(p, r, &e) <= lemma4_lower_bound_exact(p, r + 1, &e));
    }

    #[test]
    fn lemma4_is_nondecreasing_in_epsilon(p in 2u64..300, r in 1u64..200, num in 1i64..99) {
        let a = Epsilon::from_ratio(num, 100).unwrap();
        let b = Epsilon::from_ratio(num + 1, 100).unwrap();
        prop_assert!(lemma4_lower_bound_exact(p, r, &a) <= lemma4_lower_bound_exact(p, r, &b));
    }

    #[test]
    fn entropy_sits_below_quadratic(x in 1e-9f64..(1.0 - 1e-9)) {
        prop_assert!(entropy_quadratic_bound_check(x).unwrap());
        let h = binary_entropy(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn exponent_bounds_are_antisymmetric(e in 0.01f64..0.99, a in 0.01f64..0.99) {
        let rep = asymptotic_report(e, a).unwrap();
        prop_assert!((rep.f1_upper + rep.f2_upper).abs() < 1e-15);
        prop_assert!((rep.alpha_star - binary_entropy((1.0 - e) / 2.0).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn exhaustive_probability_lies_between_the_bounds() {
    for (p, r) in [(4usize, 2usize), (6, 2), (8, 2), (5, 3), (6, 3), (4, 4)] {
        for (n, d) in [(1i64, 4i64), (1, 2), (3, 4)] {
            let e = Epsilon::from_ratio(n, d).unwrap();
            let mo = exhaustive_moments(p, r, &[e.band(p as u64)]).unwrap();
            let prob = mo.prob_k_zero(0);
            assert!(
                prob >= lemma4_lower_bound_exact(p as u64, r as u64, &e),
                "p={p} r={r} eps={n}/{d}"
            );
            assert!(
                prob <= lemma5_upper_bound_exact(p as u64, r as u64, &e),
                "p={p} r={r} eps={n}/{d}"
            );
        }
    }
}

#[test]
fn lemma5_value_at_eight_two() {
    let e = Epsilon::from_ratio(1, 2).unwrap();
    let v = lemma5_upper_bound_exact(8, 2, &e);
    assert_eq!(v.to_string(), "222/5329");
    assert!((rational_to_f64(&v) - 0.041_658_8).abs() < 1e-7);
}

/// The threshold with `log₂(m+1) = p − r` under the root keeps the chain intact.
fn corrected_s_max(p: u64, q: u64) -> u64 {
    let t = z_constant() * (p as f64 / q as f64).sqrt();
    if t.fract() == 0.0 {
        t as u64 - 1
    } else {
        t.floor() as u64
    }
}

#[test]
fn chain_holds_below_the_log_m_plus_one_threshold() {
    for q in 2u64..=20 {
        let mut p = q + 1;
        while p <= (1u64 << q).min(1 << 20) {
            let s = corrected_s_max(p, q);
            if s >= 1 {
                let eps = (6.0 * q as f64 / p as f64).sqrt();
                assert!(
                    2.0 * eps * (s as f64) < recovery_delta_threshold(),
                    "p={p} q={q}"
                );
                assert!(recovery_chain_holds(p, p - q, s).unwrap());
            }
            p += 1 + p / 512;
        }
    }
}

#[test]
fn log_m_threshold_admits_a_chain_violation() {
    let t = theorem1_threshold(62_947, 62_929).unwrap();
    assert_eq!(t.s_max, 5);
    assert_eq!(corrected_s_max(62_947, 18), 4);
    assert!(!recovery_chain_holds(62_947, 62_929, t.s_max).unwrap());
}
