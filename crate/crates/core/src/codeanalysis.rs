//! Weight distributions and the weight-band statistic that certifies incoherence.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epsilon::{Band, Epsilon};
use crate::error::{Error, Result};
use crate::gf2::{generator_from_parity_check, gray_walk, popcount, BinaryMatrix};
use crate::report::sig12;

/// Default cap on the code dimension `k` for full `2^k` enumeration.
pub const DEFAULT_MAX_DIMENSION: usize = 32;

/// Gray-walk steps handled per worker task.
const CHUNK_LOG2: usize = 16;

/// Exact weight distribution `{A_w}` for `w = 0..=p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightDistribution {
    p: usize,
    counts: Vec<u64>,
}

impl WeightDistribution {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidInput(
                "weight distribution needs p >= 1".into(),
            ));
        }
        Ok(Self {
            p: counts.len() - 1,
            counts,
        })
    }

    /// Distribution of the zero code `{0}`.
    pub fn trivial(p: usize) -> Self {
        let mut counts = vec![0; p + 1];
        counts[0] = 1;
        Self { p, counts }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, w: usize) -> u64 {
        self.counts.get(w).copied().unwrap_or(0)
    }

    /// Total number of codewords, including zero.
    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    /// `K_ε`: nonzero codewords with weight `≤ ⌊(1−ε)p/2⌋` or `≥ ⌈(1+ε)p/2⌉`.
    pub fn k_epsilon(&self, epsilon: &Epsilon) -> u64 {
        self.k_in_band(epsilon.band(self.p as u64))
    }

    pub fn k_in_band(&self, band: Band) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .skip(1)
            .filter(|&(w, _)| band.is_outside(w as u64))
            .map(|(_, &c)| c)
            .sum()
    }

    /// `max |1 − 2w/p|` over weights of nonzero codewords; zero for the zero code.
    ///
    /// Every pairwise distance of distinct codewords is the weight of a nonzero
    /// codeword, and for `k ≥ 2` every nonzero weight arises that way, so this is
    /// the exact incoherence of the full code's bipolar matrix.
    pub fn mu_exact(&self) -> f64 {
        self.max_abs_correlation_numerator() as f64 / self.p as f64
    }

    /// `max |p − 2w|` over nonzero codewords, the integer numerator of [`Self::mu_exact`].
    pub fn max_abs_correlation_numerator(&self) -> u64 {
        let p = self.p as i64;
        self.counts
            .iter()
            .enumerate()
            .skip(1)
            .filter(|&(_, &c)| c > 0)
            .map(|(w, _)| (p - 2 * w as i64).unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

fn check_generator(g: &BinaryMatrix, max_dimension: usize) -> Result<()> {
    let k = g.rows();
    if k > max_dimension || k > 63 {
        return Err(Error::TooLarge {
            what: "code dimension for exhaustive enumeration",
            size: k as u128,
            limit: max_dimension.min(63) as u128,
        });
    }
    if g.rank() != k {
        return Err(Error::InvalidInput(
            "generator rows are linearly dependent".into(),
        ));
    }
    Ok(())
}

/// Weight distribution of the row span of `g`, which must have full row rank.
pub fn weight_distribution(g: &BinaryMatrix) -> Result<WeightDistribution> {
    weight_distribution_with_limit(g, DEFAULT_MAX_DIMENSION)
}

/// As [`weight_distribution`] with an explicit cap on the code dimension.
pub fn weight_distribution_with_limit(
    g: &BinaryMatrix,
    max_dimension: usize,
) -> Result<WeightDistribution> {
    check_generator(g, max_dimension)?;
    Ok(count_weights(g))
}

pub(crate) fn count_weights(g: &BinaryMatrix) -> WeightDistribution {
    let p = g.cols();
    let total = 1u64 << g.rows();
    let chunk = 1u64 << CHUNK_LOG2;
    let histogram = |start: u64, end: u64| {
        let mut counts = vec![0u64; p + 1];
        let _ = gray_walk(g, start, end, |w| {
            counts[popcount(w) as usize] += 1;
            ControlFlow::Continue(())
        });
        counts
    };
    let counts = if total <= chunk {
        histogram(0, total)
    } else {
        (0..total / chunk)
            .into_par_iter()
            .map(|c| histogram(c * chunk, (c + 1) * chunk))
            .reduce(
                || vec![0u64; p + 1],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    };
    WeightDistribution { p, counts }
}

/// Weight distribution of the full code `C(H)`; the zero code when `rank(H) = p`.
pub fn code_weight_distribution(h: &BinaryMatrix) -> Result<WeightDistribution> {
    match generator_from_parity_check(h) {
        Ok(g) => weight_distribution(&g),
        Err(Error::DegenerateCode) => Ok(WeightDistribution::trivial(h.cols())),
        Err(e) => Err(e),
    }
}

/// `K_ε ≠ 0` for the row span of `g`, stopping at the first offending codeword.
pub fn has_codeword_outside_band(g: &BinaryMatrix, band: Band) -> Result<bool> {
    check_generator(g, DEFAULT_MAX_DIMENSION)?;
    Ok(outside_band_unchecked(g, band))
}

pub(crate) fn outside_band_unchecked(g: &BinaryMatrix, band: Band) -> bool {
    let flow = gray_walk(g, 1, 1u64 << g.rows(), |w| {
        if band.is_outside(popcount(w) as u64) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    flow.is_break()
}

/// `K_ε(ε)` from a distribution.
pub fn k_epsilon(dist: &WeightDistribution, epsilon: &Epsilon) -> u64 {
    dist.k_epsilon(epsilon)
}

/// Weight-band incoherence certificate for the sensing matrix of a code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceCertificate {
    pub epsilon: Epsilon,
    pub k_epsilon: u64,
    pub certified: bool,
    /// `ε` when certified, otherwise the exact incoherence.
    #[serde(serialize_with = "sig12")]
    pub mu_bound: f64,
    #[serde(serialize_with = "sig12")]
    pub mu_exact: f64,
    pub band: [u64; 2],
}

/// Certifies `μ ≤ ε` when every nonzero weight lies in the band, and always
/// reports the exact incoherence computed from the weights.
pub fn incoherence_certificate(
    g: &BinaryMatrix,
    epsilon: &Epsilon,
) -> Result<IncoherenceCertificate> {
    let dist = weight_distribution(g)?;
    Ok(certificate_from_distribution(&dist, epsilon))
}

pub fn certificate_from_distribution(
    dist: &WeightDistribution,
    epsilon: &Epsilon,
) -> IncoherenceCertificate {
    let band = epsilon.band(dist.p() as u64);
    let k = dist.k_in_band(band);
    let mu_exact = dist.mu_exact();
    let certified = k == 0;
    IncoherenceCertificate {
        epsilon: epsilon.clone(),
        k_epsilon: k,
        certified,
        mu_bound: if certified {
            epsilon.to_f64()
        } else {
            mu_exact
        },
        mu_exact,
        band: [band.lo, band.hi],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(rows: &[&str]) -> BinaryMatrix {
        BinaryMatrix::from_bit_strs(rows).unwrap()
    }

    fn eps(s: &str) -> Epsilon {
        s.parse().unwrap()
    }

    #[test]
    fn distribution_examples() {
        assert_eq!(
            weight_distribution(&g(&["1100", "0011"])).unwrap().counts(),
            &[1, 0, 2, 0, 1]
        );
        assert_eq!(
            weight_distribution(&g(&["11"])).unwrap().counts(),
            &[1, 0, 1]
        );
        let full = weight_distribution(&BinaryMatrix::identity(6)).unwrap();
        assert_eq!(full.counts(), &[1, 6, 15, 20, 15, 6, 1]);
    }

    #[test]
    fn distribution_spanning_several_chunks() {
        // 18-dimensional full space: counts are binomial coefficients
        let d = weight_distribution(&BinaryMatrix::identity(18)).unwrap();
        let mut c = 1u64;
        for w in 0..=18u64 {
            assert_eq!(d.count(w as usize), c);
            c = c * (18 - w) / (w + 1);
        }
    }

    #[test]
    fn guard_and_dependency_checks() {
        let r = weight_distribution_with_limit(&BinaryMatrix::identity(5), 4);
        assert!(matches!(r, Err(Error::TooLarge { .. })));
        assert!(matches!(
            weight_distribution(&g(&["1100", "1100"])),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn k_epsilon_examples() {
        let d = weight_distribution(&g(&["1100", "0011"])).unwrap();
        assert_eq!(d.k_epsilon(&eps("0.9")), 1);
        let d = weight_distribution(&g(&["11"])).unwrap();
        assert_eq!(d.k_epsilon(&eps("0.5")), 1);
        let d = weight_distribution(&g(&["1100", "0110"])).unwrap();
        for e in ["0.01", "0.5", "0.99"] {
            assert_eq!(d.k_epsilon(&eps(e)), 0);
        }
    }

    #[test]
    fn certificates() {
        let c = incoherence_certificate(&g(&["1100", "0110"]), &eps("0.3")).unwrap();
        assert!(c.certified);
        assert_eq!(c.mu_exact, 0.0);
        assert_eq!(c.mu_bound, 0.3);

        let c = incoherence_certificate(&g(&["1100", "0011"]), &eps("0.5")).unwrap();
        assert!(!c.certified);
        assert_eq!(c.k_epsilon, 1);
        assert_eq!(c.mu_exact, 1.0);
        assert_eq!(c.band, [1, 3]);

        let c = incoherence_certificate(&BinaryMatrix::identity(5), &eps("0.5")).unwrap();
        assert_eq!(c.mu_exact, 1.0);
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["epsilon"], "0.5");
        assert_eq!(json["band"], serde_json::json!([1, 4]));
    }

    #[test]
    fn early_exit_matches_full_count() {
        let gens = [
            g(&["1100", "0110"]),
            g(&["1100", "0011"]),
            BinaryMatrix::identity(7),
        ];
        for gen in &gens {
            let d = weight_distribution(gen).unwrap();
            for e in ["0.2", "0.5", "0.8"] {
                let band = eps(e).band(gen.cols() as u64);
                assert_eq!(
                    has_codeword_outside_band(gen, band).unwrap(),
                    d.k_in_band(band) > 0
                );
            }
        }
    }

    #[test]
    fn degenerate_code_distribution() {
        let d = code_weight_distribution(&BinaryMatrix::identity(3)).unwrap();
        assert_eq!(d.counts(), &[1, 0, 0, 0]);
        assert_eq!(d.mu_exact(), 0.0);
    }
}
