//! The uniform ensemble of `r × p` parity-check matrices.
//!
//! Monte-Carlo trial `i` draws its matrix from a ChaCha stream keyed by
//! `(seed, i)`, so any subset of trials can be regenerated independently and
//! the aggregate does not depend on scheduling.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codeanalysis::{
    count_weights, outside_band_unchecked, WeightDistribution, DEFAULT_MAX_DIMENSION,
};
use crate::epsilon::{rational_to_f64, round_product, Band, Epsilon};
use crate::error::{Error, Result};
use crate::gf2::{generator_from_parity_check, BinaryMatrix};
use crate::report::{sig12, sig12_opt, sig12_vec};
use crate::ripbounds::{
    asymptotic_report, binomial, lemma4_lower_bound_exact, lemma5_upper_bound_exact, Regime,
};

/// Default cap on `r·p` for exhaustive enumeration (`2^20` matrices).
pub const DEFAULT_EXHAUSTIVE_BITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    MonteCarlo,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub p: usize,
    pub r: usize,
    pub seed: u64,
    pub trials: u64,
    pub mode: Mode,
}

impl EnsembleSpec {
    pub fn monte_carlo(p: usize, r: usize, seed: u64, trials: u64) -> Self {
        Self {
            p,
            r,
            seed,
            trials,
            mode: Mode::MonteCarlo,
        }
    }

    /// Exhaustive spec; `trials` records the number of matrices, `2^{rp}`.
    pub fn exhaustive(p: usize, r: usize) -> Self {
        let trials = if r * p < 64 {
            1u64 << (r * p)
        } else {
            u64::MAX
        };
        Self {
            p,
            r,
            seed: 0,
            trials,
            mode: Mode::Exhaustive,
        }
    }

    fn validate(&self, exhaustive_bits: usize) -> Result<()> {
        if self.p == 0 || self.r == 0 {
            return Err(Error::InvalidInput(
                "ensemble needs p >= 1 and r >= 1".into(),
            ));
        }
        match self.mode {
            Mode::MonteCarlo if self.trials == 0 => Err(Error::InvalidInput(
                "Monte-Carlo estimation needs at least one trial".into(),
            )),
            Mode::Exhaustive if self.r * self.p > exhaustive_bits => Err(Error::TooLarge {
                what: "exhaustive ensemble size r*p (bits)",
                size: (self.r * self.p) as u128,
                limit: exhaustive_bits as u128,
            }),
            _ => Ok(()),
        }
    }
}

/// Matrix of trial `index`: i.i.d. uniform bits from the stream `(seed, index)`.
pub fn sample(spec: &EnsembleSpec, index: u64) -> BinaryMatrix {
    sample_matrix(spec.p, spec.r, spec.seed, index)
}

pub fn sample_matrix(p: usize, r: usize, seed: u64, index: u64) -> BinaryMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut word = 0u64;
    let mut left = 0;
    BinaryMatrix::from_fn(r, p, |_, _| {
        if left == 0 {
            word = rng.next_u64();
            left = 64;
        }
        let bit = word & 1 == 1;
        word >>= 1;
        left -= 1;
        bit
    })
}

/// Matrix number `index` of the exhaustive scan: bit `t` is entry `(t / p, t % p)`.
pub fn matrix_from_index(p: usize, r: usize, index: u64) -> BinaryMatrix {
    BinaryMatrix::from_fn(r, p, |i, j| index >> (i * p + j) & 1 == 1)
}

fn code_distribution(
    h: &BinaryMatrix,
    max_dimension: usize,
) -> Result<(WeightDistribution, usize)> {
    match generator_from_parity_check(h) {
        Ok(g) => {
            if g.rows() > max_dimension {
                return Err(Error::TooLarge {
                    what: "code dimension for exhaustive enumeration",
                    size: g.rows() as u128,
                    limit: max_dimension as u128,
                });
            }
            let k = g.rows();
            Ok((count_weights(&g), k))
        }
        Err(Error::DegenerateCode) => Ok((WeightDistribution::trivial(h.cols()), 0)),
        Err(e) => Err(e),
    }
}

/// `E[A_w] = C(p,w) 2^{−r}` for `w = 1..=p`.
pub fn expected_weight_distribution(p: usize, r: usize) -> Vec<f64> {
    (1..=p)
        .map(|w| rational_to_f64(&expected_weight_count_exact(p, r, w)))
        .collect()
}

pub fn expected_weight_count_exact(p: usize, r: usize, w: usize) -> BigRational {
    BigRational::new(
        BigInt::from(binomial(p as u64, w as u64)),
        BigInt::from(BigUint::one() << r),
    )
}

/// `Cov(A_{w1}, A_{w2}) = (1 − 2^{−r}) 2^{−r} C(p,w)` when `w1 = w2 = w`, else 0.
pub fn covariance(p: usize, r: usize, w1: usize, w2: usize) -> Result<f64> {
    Ok(rational_to_f64(&covariance_exact(p, r, w1, w2)?))
}

pub fn covariance_exact(p: usize, r: usize, w1: usize, w2: usize) -> Result<BigRational> {
    for w in [w1, w2] {
        if w == 0 || w > p {
            return Err(Error::IndexOutOfRange {
                index: w as u64,
                len: p as u64,
            });
        }
    }
    if w1 != w2 {
        return Ok(BigRational::zero());
    }
    let two_r = BigInt::from(BigUint::one() << r);
    let c = BigInt::from(binomial(p as u64, w1 as u64));
    Ok(BigRational::new((&two_r - 1u8) * c, &two_r * &two_r))
}

/// `E[K_ε] = 2^{−r} (Σ_{w=1}^{lo} C(p,w) + Σ_{w=hi}^{p} C(p,w))`.
pub fn expected_k_epsilon_exact(p: usize, r: usize, band: Band) -> BigRational {
    let sum: BigUint = (1..=p as u64)
        .filter(|&w| band.is_outside(w))
        .map(|w| binomial(p as u64, w))
        .sum();
    BigRational::new(BigInt::from(sum), BigInt::from(BigUint::one() << r))
}

/// Exact first and second moments of the weight distribution over every
/// matrix of the ensemble, plus `K_ε` tallies for the requested bands.
#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustiveMoments {
    pub p: usize,
    pub r: usize,
    pub matrices: u64,
    /// `Σ_H A_w(H)`, `w = 0..=p`.
    pub sum_a: Vec<u128>,
    /// `Σ_H A_{w1}(H) A_{w2}(H)`, row-major `(p+1) × (p+1)`.
    pub sum_aa: Vec<u128>,
    /// Per band: number of matrices with `K_ε = 0`.
    pub k_zero: Vec<u64>,
    /// Per band: `Σ_H K_ε(H)`.
    pub sum_k: Vec<u128>,
}

impl ExhaustiveMoments {
    fn empty(p: usize, r: usize, bands: usize) -> Self {
        Self {
            p,
            r,
            matrices: 0,
            sum_a: vec![0; p + 1],
            sum_aa: vec![0; (p + 1) * (p + 1)],
            k_zero: vec![0; bands],
            sum_k: vec![0; bands],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.matrices += other.matrices;
        let add = |a: &mut Vec<u128>, b: &[u128]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.sum_a, &other.sum_a);
        add(&mut self.sum_aa, &other.sum_aa);
        add(&mut self.sum_k, &other.sum_k);
        self.k_zero
            .iter_mut()
            .zip(&other.k_zero)
            .for_each(|(x, y)| *x += y);
        self
    }

    fn denom(&self) -> BigInt {
        BigInt::from(self.matrices)
    }

    pub fn mean(&self, w: usize) -> BigRational {
        BigRational::new(BigInt::from(self.sum_a[w]), self.denom())
    }

    /// `E[A_{w1} A_{w2}] − E[A_{w1}] E[A_{w2}]`, exactly.
    pub fn covariance(&self, w1: usize, w2: usize) -> BigRational {
        let second = BigRational::new(
            BigInt::from(self.sum_aa[w1 * (self.p + 1) + w2]),
            self.denom(),
        );
        second - self.mean(w1) * self.mean(w2)
    }

    pub fn prob_k_zero(&self, band_index: usize) -> BigRational {
        BigRational::new(BigInt::from(self.k_zero[band_index]), self.denom())
    }

    pub fn mean_k(&self, band_index: usize) -> BigRational {
        BigRational::new(BigInt::from(self.sum_k[band_index]), self.denom())
    }

    /// Means and covariances agree with the closed forms for all `w1, w2 ≥ 1`.
    pub fn matches_closed_forms(&self) -> bool {
        (1..=self.p).all(|w| self.mean(w) == expected_weight_count_exact(self.p, self.r, w))
            && (1..=self.p).all(|a| {
                (1..=self.p)
                    .all(|b| Ok(self.covariance(a, b)) == covariance_exact(self.p, self.r, a, b))
            })
    }
}

/// Visits every `r × p` matrix once.
pub fn exhaustive_moments(p: usize, r: usize, bands: &[Band]) -> Result<ExhaustiveMoments> {
    exhaustive_moments_with_limit(p, r, bands, DEFAULT_EXHAUSTIVE_BITS)
}

pub fn exhaustive_moments_with_limit(
    p: usize,
    r: usize,
    bands: &[Band],
    exhaustive_bits: usize,
) -> Result<ExhaustiveMoments> {
    EnsembleSpec::exhaustive(p, r).validate(exhaustive_bits)?;
    let total = 1u64 << (r * p);
    let chunk = 4096u64;
    let chunks = total.div_ceil(chunk);
    (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<ExhaustiveMoments> {
            let mut acc = ExhaustiveMoments::empty(p, r, bands.len());
            for index in c * chunk..((c + 1) * chunk).min(total) {
                let h = matrix_from_index(p, r, index);
                let (dist, _) = code_distribution(&h, p)?;
                let counts = dist.counts();
                acc.matrices += 1;
                for (w1, &a1) in counts.iter().enumerate() {
                    acc.sum_a[w1] += a1 as u128;
                    if a1 == 0 {
                        continue;
                    }
                    for (w2, &a2) in counts.iter().enumerate() {
                        acc.sum_aa[w1 * (p + 1) + w2] += a1 as u128 * a2 as u128;
                    }
                }
                for (b, band) in bands.iter().enumerate() {
                    let k = dist.k_in_band(*band);
                    acc.sum_k[b] += k as u128;
                    if k == 0 {
                        acc.k_zero[b] += 1;
                    }
                }
            }
            Ok(acc)
        })
        .try_reduce(
            || ExhaustiveMoments::empty(p, r, bands.len()),
            |a, b| Ok(a.merge(b)),
        )
}

/// Per-trial observation, kept only on request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub dimension: usize,
    pub k_epsilon: u64,
}

#[derive(Clone, Debug)]
pub struct EnsembleOptions {
    pub keep_trials: bool,
    pub exhaustive_bits: usize,
    pub max_dimension: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            keep_trials: false,
            exhaustive_bits: DEFAULT_EXHAUSTIVE_BITS,
            max_dimension: DEFAULT_MAX_DIMENSION,
        }
    }
}

/// Ensemble estimate of `Prob[K_ε = 0]` with the bounds it should respect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub spec: EnsembleSpec,
    pub epsilon: Epsilon,
    pub band: [u64; 2],
    pub trials_run: u64,
    #[serde(serialize_with = "sig12")]
    pub prob_k_zero: f64,
    #[serde(serialize_with = "sig12")]
    pub stderr: f64,
    /// Exact rational, exhaustive mode only.
    pub prob_k_zero_exact: Option<String>,
    /// Empirical `E[A_w]`, `w = 0..=p`.
    #[serde(serialize_with = "sig12_vec")]
    pub mean_aw: Vec<f64>,
    /// Closed-form `E[A_w]`, `w = 0..=p` (`w = 0` is always 1).
    #[serde(serialize_with = "sig12_vec")]
    pub expected_aw: Vec<f64>,
    #[serde(serialize_with = "sig12")]
    pub mean_k: f64,
    #[serde(serialize_with = "sig12")]
    pub expected_k: f64,
    pub expected_k_exact: String,
    #[serde(serialize_with = "sig12")]
    pub lemma4_lower: f64,
    #[serde(serialize_with = "sig12")]
    pub lemma5_upper: f64,
    /// `Prob[K_ε ≥ 1] ≤ E[K_ε]`; exact in exhaustive mode.
    pub markov_check: bool,
    /// Exhaustive: `Prob[K_ε = 0] ≥ lemma4` exactly. Monte-Carlo: within 3 standard errors.
    pub lemma4_check: bool,
    /// Exhaustive: `Prob[K_ε = 0] ≤ lemma5` exactly. Monte-Carlo: within 3 standard errors.
    pub lemma5_check: bool,
    /// Exhaustive only: means and covariances equal the closed forms exactly.
    pub moments_match: Option<bool>,
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
}

pub fn estimate_prob_k_zero(spec: &EnsembleSpec, epsilon: &Epsilon) -> Result<EnsembleReport> {
    estimate_prob_k_zero_with(spec, epsilon, &EnsembleOptions::default())
}

pub fn estimate_prob_k_zero_with(
    spec: &EnsembleSpec,
    epsilon: &Epsilon,
    options: &EnsembleOptions,
) -> Result<EnsembleReport> {
    spec.validate(options.exhaustive_bits)?;
    let (p, r) = (spec.p, spec.r);
    let band = epsilon.band(p as u64);
    let l4 = lemma4_lower_bound_exact(p as u64, r as u64, epsilon);
    let l5 = lemma5_upper_bound_exact(p as u64, r as u64, epsilon);
    let ek = expected_k_epsilon_exact(p, r, band);
    let mut expected_aw = vec![1.0];
    expected_aw.extend(expected_weight_distribution(p, r));

    let report = |trials_run: u64,
                  prob: f64,
                  stderr: f64,
                  mean_aw: Vec<f64>,
                  mean_k: f64,
                  checks: (bool, bool, bool)| EnsembleReport {
        spec: spec.clone(),
        epsilon: epsilon.clone(),
        band: [band.lo, band.hi],
        trials_run,
        prob_k_zero: prob,
        stderr,
        prob_k_zero_exact: None,
        mean_aw,
        expected_aw: expected_aw.clone(),
        mean_k,
        expected_k: rational_to_f64(&ek),
        expected_k_exact: ek.to_string(),
        lemma4_lower: rational_to_f64(&l4),
        lemma5_upper: rational_to_f64(&l5),
        markov_check: checks.0,
        lemma4_check: checks.1,
        lemma5_check: checks.2,
        moments_match: None,
        trials: Vec::new(),
    };

    match spec.mode {
        Mode::Exhaustive => {
            let mom = exhaustive_moments_with_limit(p, r, &[band], options.exhaustive_bits)?;
            let prob = mom.prob_k_zero(0);
            let fail = BigRational::one() - &prob;
            let checks = (fail <= ek, prob >= l4, prob <= l5);
            let mean_aw = (0..=p).map(|w| rational_to_f64(&mom.mean(w))).collect();
            let mut rep = report(
                mom.matrices,
                rational_to_f64(&prob),
                0.0,
                mean_aw,
                rational_to_f64(&mom.mean_k(0)),
                checks,
            );
            rep.prob_k_zero_exact = Some(prob.to_string());
            rep.moments_match = Some(mom.matches_closed_forms());
            Ok(rep)
        }
        Mode::MonteCarlo => {
            let per_trial = (0..spec.trials)
                .into_par_iter()
                .map(|i| {
                    let (dist, dimension) =
                        code_distribution(&sample(spec, i), options.max_dimension)?;
                    let rec = TrialRecord {
                        trial: i,
                        dimension,
                        k_epsilon: dist.k_in_band(band),
                    };
                    Ok((dist, rec))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut sum_a = vec![0u128; p + 1];
            let mut records = Vec::with_capacity(per_trial.len());
            for (dist, rec) in per_trial {
                sum_a
                    .iter_mut()
                    .zip(dist.counts())
                    .for_each(|(s, &c)| *s += c as u128);
                records.push(rec);
            }
            let n = spec.trials as f64;
            let zero = records.iter().filter(|t| t.k_epsilon == 0).count() as f64;
            let prob = zero / n;
            let stderr = (prob * (1.0 - prob) / n).sqrt();
            let mean_k = records.iter().map(|t| t.k_epsilon as f64).sum::<f64>() / n;
            let mean_aw = sum_a.iter().map(|&s| s as f64 / n).collect();
            let l4f = rational_to_f64(&l4);
            let l5f = rational_to_f64(&l5);
            let checks = (
                1.0 - prob <= rational_to_f64(&ek) + 3.0 * stderr,
                prob >= l4f - 3.0 * stderr,
                prob <= l5f + 3.0 * stderr,
            );
            let mut rep = report(spec.trials, prob, stderr, mean_aw, mean_k, checks);
            if options.keep_trials {
                rep.trials = records;
            }
            Ok(rep)
        }
    }
}

/// One row of the finite-size exponent table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub p: usize,
    pub r: usize,
    pub trials: u64,
    pub k_zero: u64,
    #[serde(serialize_with = "sig12")]
    pub prob_k_zero: f64,
    #[serde(serialize_with = "sig12")]
    pub prob_k_nonzero: f64,
    #[serde(serialize_with = "sig12")]
    pub stderr: f64,
    /// `(1/p) log₂ Prob[K_ε = 0]`, absent when the estimate is zero.
    #[serde(serialize_with = "sig12_opt")]
    pub exponent_k_zero: Option<f64>,
    /// `(1/p) log₂ Prob[K_ε ≠ 0]`, absent when the estimate is zero.
    #[serde(serialize_with = "sig12_opt")]
    pub exponent_k_nonzero: Option<f64>,
    #[serde(serialize_with = "sig12")]
    pub f1_upper: f64,
    #[serde(serialize_with = "sig12")]
    pub f2_upper: f64,
    #[serde(serialize_with = "sig12")]
    pub alpha_star: f64,
    pub regime: Regime,
    /// `InsufficientData` notes for exponents that could not be formed.
    pub notes: Vec<String>,
}

/// Estimates `Prob[K_ε = 0]` at `r = round(α p)` for each `p`, alongside the
/// asymptotic exponent bounds at the nominal `α`.
pub fn finite_size_exponents(
    epsilon: &Epsilon,
    alpha: &BigRational,
    p_list: &[usize],
    seed: u64,
    trials: u64,
) -> Result<Vec<ExponentRow>> {
    if trials == 0 {
        return Err(Error::InvalidInput(
            "exponent estimation needs at least one trial".into(),
        ));
    }
    let alpha_f = rational_to_f64(alpha);
    let asym = asymptotic_report(epsilon.to_f64(), alpha_f)?;
    p_list
        .iter()
        .map(|&p| {
            let r = round_product(alpha, p as u64) as usize;
            if r == 0 || r >= p {
                return Err(Error::InvalidInput(format!(
                    "alpha * p rounds to r = {r}, outside 1..{p}"
                )));
            }
            let band = epsilon.band(p as u64);
            let k_zero: u64 = (0..trials)
                .into_par_iter()
                .map(|i| -> Result<u64> {
                    let h = sample_matrix(p, r, seed, i);
                    let nonzero = match generator_from_parity_check(&h) {
                        Ok(g) => {
                            if g.rows() > DEFAULT_MAX_DIMENSION {
                                return Err(Error::TooLarge {
                                    what: "code dimension for exhaustive enumeration",
                                    size: g.rows() as u128,
                                    limit: DEFAULT_MAX_DIMENSION as u128,
                                });
                            }
                            outside_band_unchecked(&g, band)
                        }
                        Err(Error::DegenerateCode) => false,
                        Err(e) => return Err(e),
                    };
                    Ok(u64::from(!nonzero))
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            let n = trials as f64;
            let prob_k_zero = k_zero as f64 / n;
            let prob_k_nonzero = (trials - k_zero) as f64 / n;
            let exponent = |q: f64| (q > 0.0).then(|| q.log2() / p as f64);
            let mut notes = Vec::new();
            if k_zero == 0 {
                notes.push("InsufficientData: no trial had K_eps = 0".to_string());
            }
            if k_zero == trials {
                notes.push("InsufficientData: every trial had K_eps = 0".to_string());
            }
            Ok(ExponentRow {
                p,
                r,
                trials,
                k_zero,
                prob_k_zero,
                prob_k_nonzero,
                stderr: (prob_k_zero * (1.0 - prob_k_zero) / n).sqrt(),
                exponent_k_zero: exponent(prob_k_zero),
                exponent_k_nonzero: exponent(prob_k_nonzero),
                f1_upper: asym.f1_upper,
                f2_upper: asym.f2_upper,
                alpha_star: asym.alpha_star,
                regime: asym.regime,
                notes,
            })
        })
        .collect()
}
