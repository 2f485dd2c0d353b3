//! Closed-form bounds: coherence to RIP, the ensemble success and failure
//! probabilities, the sparsity threshold and the asymptotic exponents.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::epsilon::{rational_to_f64, Epsilon};
use crate::error::{Error, Result};
use crate::report::{sig12, sig12_opt};

/// `C(n, k)` as a big integer.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// `Σ_{w=0}^{min(upto, n)} C(n, w)`.
pub fn binomial_prefix_sum(n: u64, upto: u64) -> BigUint {
    let mut term = BigUint::one();
    let mut sum = BigUint::one();
    for w in 0..upto.min(n) {
        term = term * (n - w) / (w + 1);
        sum += &term;
    }
    sum
}

/// `(√2 − 1) / (2√6)`.
pub fn z_constant() -> f64 {
    (std::f64::consts::SQRT_2 - 1.0) / (2.0 * 6f64.sqrt())
}

/// Right-hand side of the RIP recovery condition, `√2 − 1`.
pub fn recovery_delta_threshold() -> f64 {
    std::f64::consts::SQRT_2 - 1.0
}

/// Binary entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!(
            "binary entropy needs 0 <= x <= 1, got {x}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Checks `−2(x − ½)² ≥ H(x) − 1` up to `1e-12`.
pub fn entropy_quadratic_bound_check(x: f64) -> Result<bool> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::DomainError(format!(
            "quadratic entropy bound needs 0 < x < 1, got {x}"
        )));
    }
    let lhs = -2.0 * (x - 0.5) * (x - 0.5);
    Ok(lhs >= binary_entropy(x)? - 1.0 - 1e-12)
}

/// `μ · S`, a strict upper bound on `δ_S`.
pub fn delta_upper_bound(mu: f64, s: usize) -> f64 {
    debug_assert!(mu >= 0.0 && s >= 1);
    mu * s as f64
}

fn band_sum(p: u64, epsilon: &Epsilon) -> BigUint {
    binomial_prefix_sum(p, epsilon.lower_index(p))
}

/// `1 − 2^{1−r} Σ_{w=0}^{⌊(1−ε)p/2⌋} C(p,w)` as an exact rational.
pub fn lemma4_lower_bound_exact(p: u64, r: u64, epsilon: &Epsilon) -> BigRational {
    let x = BigInt::from(band_sum(p, epsilon));
    let two_r = BigInt::from(BigUint::one() << r);
    BigRational::one() - BigRational::new(x * 2u8, two_r)
}

/// Lower bound on `Prob[μ(Φ(H)) ≤ ε]` over the uniform ensemble; may be negative.
pub fn lemma4_lower_bound(p: u64, r: u64, epsilon: &Epsilon) -> f64 {
    rational_to_f64(&lemma4_lower_bound_exact(p, r, epsilon))
}

/// `(1 − 2^{−r}) 2^{1+r} X / (2X − 1)²` with `X = Σ_{w=0}^{⌊(1−ε)p/2⌋} C(p,w)`,
/// which equals `2 (2^r − 1) X / (2X − 1)²`.
pub fn lemma5_upper_bound_exact(p: u64, r: u64, epsilon: &Epsilon) -> BigRational {
    let x = BigInt::from(band_sum(p, epsilon));
    let two_r = BigInt::from(BigUint::one() << r);
    let denom: BigInt = &x * 2u8 - 1u8;
    BigRational::new((two_r - 1u8) * &x * 2u8, &denom * &denom)
}

/// Upper bound on `Prob[K_ε(H) = 0]`; may exceed 1.
pub fn lemma5_upper_bound(p: u64, r: u64, epsilon: &Epsilon) -> f64 {
    rational_to_f64(&lemma5_upper_bound_exact(p, r, epsilon))
}

/// `log₂(2^q − 1)`, accurate for every `q ≥ 1`.
pub fn log2_m(q: u64) -> f64 {
    q as f64 + (-(0.5f64).powi(q.min(1100) as i32)).ln_1p() / std::f64::consts::LN_2
}

/// Sparsity threshold derived from the weight-band argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Threshold {
    /// Largest integer strictly below [`Self::threshold`].
    pub s_max: u64,
    /// `Z √(p / log₂ m)`.
    #[serde(serialize_with = "sig12")]
    pub threshold: f64,
    /// `√(6 log₂(m+1) / p)`.
    #[serde(serialize_with = "sig12")]
    pub epsilon_star: f64,
    /// `1 − 2^{1−p+r}`.
    #[serde(serialize_with = "sig12")]
    pub prob: f64,
}

fn check_construction(p: u64, r: u64) -> Result<u64> {
    if p <= r {
        return Err(Error::AssumptionViolated(format!(
            "need p > r, got p = {p}, r = {r}"
        )));
    }
    let q = p - r;
    if q < 64 && (1u64 << q) < p {
        return Err(Error::AssumptionViolated(format!(
            "2^(p-r) >= p fails: 2^{q} < {p}"
        )));
    }
    Ok(q)
}

/// `S_max`, `ε*` and the success probability for an `r × p` parity-check ensemble.
pub fn theorem1_threshold(p: u64, r: u64) -> Result<Theorem1Threshold> {
    let q = check_construction(p, r)?;
    if q < 2 {
        return Err(Error::AssumptionViolated(
            "m = 2^(p-r) - 1 must be at least 2".into(),
        ));
    }
    let threshold = z_constant() * (p as f64 / log2_m(q)).sqrt();
    let s_max = if threshold.fract() == 0.0 {
        threshold as u64 - 1
    } else {
        threshold.floor() as u64
    };
    Ok(Theorem1Threshold {
        s_max,
        threshold,
        epsilon_star: (6.0 * q as f64 / p as f64).sqrt(),
        prob: 1.0 - 2f64.powi(1 - q.min(2000) as i32),
    })
}

/// `2 ε* S < √2 − 1`, the bound chain behind the sparsity threshold.
pub fn recovery_chain_holds(p: u64, r: u64, s: u64) -> Result<bool> {
    let t = theorem1_threshold(p, r)?;
    Ok(2.0 * t.epsilon_star * (s as f64) < recovery_delta_threshold())
}

/// All finite-size bounds for one `(p, r, ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: u64,
    pub r: u64,
    pub m: u128,
    pub epsilon: Epsilon,
    #[serde(serialize_with = "sig12")]
    pub lemma4_lower: f64,
    pub lemma4_lower_exact: String,
    #[serde(serialize_with = "sig12")]
    pub lemma5_upper: f64,
    pub lemma5_upper_exact: String,
    pub theorem1_smax: u64,
    #[serde(serialize_with = "sig12")]
    pub theorem1_threshold: f64,
    #[serde(serialize_with = "sig12")]
    pub theorem1_epsilon_star: f64,
    #[serde(serialize_with = "sig12")]
    pub theorem1_prob: f64,
    /// `μ S_max` bound with `μ ≤ ε*`, when `S_max ≥ 1`: `2 ε* S_max`.
    #[serde(serialize_with = "sig12_opt")]
    pub delta_2s_bound: Option<f64>,
    #[serde(rename = "Z", serialize_with = "sig12")]
    pub z: f64,
    pub vacuous: Vec<String>,
}

pub fn bound_report(p: u64, r: u64, epsilon: &Epsilon) -> Result<BoundReport> {
    let t = theorem1_threshold(p, r)?;
    let q = p - r;
    if q > 127 {
        return Err(Error::TooLarge {
            what: "p - r",
            size: q as u128,
            limit: 127,
        });
    }
    let l4 = lemma4_lower_bound_exact(p, r, epsilon);
    let l5 = lemma5_upper_bound_exact(p, r, epsilon);
    let lemma4_lower = rational_to_f64(&l4);
    let lemma5_upper = rational_to_f64(&l5);
    let mut vacuous = Vec::new();
    if lemma4_lower <= 0.0 {
        vacuous.push("lemma4_lower".to_string());
    }
    if lemma5_upper >= 1.0 {
        vacuous.push("lemma5_upper".to_string());
    }
    if t.s_max == 0 {
        vacuous.push("theorem1_smax".to_string());
    }
    Ok(BoundReport {
        p,
        r,
        m: (1u128 << q) - 1,
        epsilon: epsilon.clone(),
        lemma4_lower,
        lemma4_lower_exact: l4.to_string(),
        lemma5_upper,
        lemma5_upper_exact: l5.to_string(),
        theorem1_smax: t.s_max,
        theorem1_threshold: t.threshold,
        theorem1_epsilon_star: t.epsilon_star,
        theorem1_prob: t.prob,
        delta_2s_bound: (t.s_max >= 1).then_some(2.0 * t.epsilon_star * t.s_max as f64),
        z: z_constant(),
        vacuous,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowCritical,
    AboveCritical,
    AtCritical,
}

/// Exponent bounds at rate `α = r/p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    #[serde(serialize_with = "sig12")]
    pub epsilon: f64,
    #[serde(serialize_with = "sig12")]
    pub alpha: f64,
    /// Bound on the exponent of `Prob[K_ε = 0]`.
    #[serde(serialize_with = "sig12")]
    pub f1_upper: f64,
    /// Bound on the exponent of `Prob[K_ε ≠ 0]`.
    #[serde(serialize_with = "sig12")]
    pub f2_upper: f64,
    #[serde(serialize_with = "sig12")]
    pub alpha_star: f64,
    pub regime: Regime,
}

/// Critical rate `α*(ε) = H((1−ε)/2)`.
pub fn critical_exponent(epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::DomainError(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    binary_entropy((1.0 - epsilon) / 2.0)
}

pub fn asymptotic_report(epsilon: f64, alpha: f64) -> Result<AsymptoticReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let alpha_star = critical_exponent(epsilon)?;
    let f1_upper = alpha - alpha_star;
    let f2_upper = alpha_star - alpha;
    let regime = if f1_upper.abs() <= 1e-12 {
        Regime::AtCritical
    } else if f1_upper > 0.0 {
        Regime::AboveCritical
    } else {
        Regime::BelowCritical
    };
    Ok(AsymptoticReport {
        epsilon,
        alpha,
        f1_upper,
        f2_upper,
        alpha_star,
        regime,
    })
}
