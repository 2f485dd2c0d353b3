use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, eigen_extremes, DenseMatrix};
use crate::report::sig12;
use crate::ripbounds::binomial;
use crate::sensing::CompactSensingMatrix;

/// Default cap on `C(m, order)` for exact RIP scans.
pub const DEFAULT_SUBSET_LIMIT: u128 = 10_000_000;

/// Largest order accepted by the exact scan.
pub const MAX_ORDER: usize = 32;

/// Pairs scanned by [`exact_incoherence`] at most.
const PAIR_LIMIT: u128 = 1 << 31;

/// Dense column sets with at most this many columns get a cached Gram matrix.
const CACHED_GRAM_COLUMNS: usize = 4096;

/// Either kind of sensing matrix the oracles accept.
#[derive(Clone, Copy, Debug)]
pub enum SensingRef<'a> {
    Compact(&'a CompactSensingMatrix),
    Dense(&'a DenseMatrix),
}

impl<'a> From<&'a CompactSensingMatrix> for SensingRef<'a> {
    fn from(s: &'a CompactSensingMatrix) -> Self {
        SensingRef::Compact(s)
    }
}

impl<'a> From<&'a DenseMatrix> for SensingRef<'a> {
    fn from(d: &'a DenseMatrix) -> Self {
        SensingRef::Dense(d)
    }
}

/// Column inner products `φᵢᵀφⱼ` with 0-based indices.
enum Columns<'a> {
    Binary { p: i64, words: Vec<Vec<u64>> },
    Cached(DenseMatrix),
    Real(&'a DenseMatrix),
}

impl<'a> Columns<'a> {
    fn new(phi: SensingRef<'a>) -> Self {
        match phi {
            SensingRef::Compact(s) => Columns::Binary {
                p: s.p() as i64,
                words: s
                    .codewords()
                    .into_iter()
                    .map(|c| c.into_bits().words().to_vec())
                    .collect(),
            },
            SensingRef::Dense(d) if d.cols() <= CACHED_GRAM_COLUMNS => Columns::Cached(d.gram()),
            SensingRef::Dense(d) => Columns::Real(d),
        }
    }

    fn len(&self) -> usize {
        match self {
            Columns::Binary { words, .. } => words.len(),
            Columns::Cached(g) => g.cols(),
            Columns::Real(d) => d.cols(),
        }
    }

    fn inner(&self, i: usize, j: usize) -> f64 {
        match self {
            Columns::Binary { p, words } => {
                if i == j {
                    return 1.0;
                }
                let d: u32 = words[i]
                    .iter()
                    .zip(&words[j])
                    .map(|(a, b)| (a ^ b).count_ones())
                    .sum();
                (p - 2 * d as i64) as f64 / *p as f64
            }
            Columns::Cached(g) => g.get(i, j),
            Columns::Real(d) => dot(d.column(i), d.column(j)),
        }
    }
}

/// `Φ_Qᵀ Φ_Q` for a sorted index set `Q ⊂ [1, m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramSubmatrix {
    indices: Vec<u64>,
    gram: DenseMatrix,
}

impl GramSubmatrix {
    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    /// `max(λ_max − 1, 1 − λ_min)`.
    pub fn delta(&self) -> f64 {
        deviation(&self.gram)
    }
}

fn deviation(g: &DenseMatrix) -> f64 {
    let (lo, hi) = eigen_extremes(g);
    (hi - 1.0).max(1.0 - lo).max(0.0)
}

/// Gram submatrix for 1-based column indices, which must be strictly increasing.
pub fn gram_submatrix<'a>(
    phi: impl Into<SensingRef<'a>>,
    indices: &[u64],
) -> Result<GramSubmatrix> {
    let cols = Columns::new(phi.into());
    let m = cols.len() as u64;
    for (n, &j) in indices.iter().enumerate() {
        if j == 0 || j > m {
            return Err(Error::IndexOutOfRange { index: j, len: m });
        }
        if n > 0 && indices[n - 1] >= j {
            return Err(Error::InvalidInput(
                "indices must be strictly increasing".into(),
            ));
        }
    }
    let zero_based: Vec<usize> = indices.iter().map(|&j| (j - 1) as usize).collect();
    let mut gram = DenseMatrix::zeros(indices.len(), indices.len());
    fill_gram(&cols, &zero_based, &mut gram);
    Ok(GramSubmatrix {
        indices: indices.to_vec(),
        gram,
    })
}

fn fill_gram(cols: &Columns, q: &[usize], out: &mut DenseMatrix) {
    for a in 0..q.len() {
        out.set(a, a, cols.inner(q[a], q[a]));
        for b in a + 1..q.len() {
            let v = cols.inner(q[a], q[b]);
            out.set(a, b, v);
            out.set(b, a, v);
        }
    }
}

/// Exact RIP constant of one order with the subset attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipConstant {
    pub order: usize,
    #[serde(serialize_with = "sig12")]
    pub delta: f64,
    /// 1-based column indices, lexicographically first among maximizers.
    pub witness: Vec<u64>,
    pub method: String,
}

/// `δ_S` by scanning every size-`order` column subset.
pub fn exact_rip_constant<'a>(phi: impl Into<SensingRef<'a>>, order: usize) -> Result<RipConstant> {
    exact_rip_constant_with_limit(phi, order, DEFAULT_SUBSET_LIMIT)
}

pub fn exact_rip_constant_with_limit<'a>(
    phi: impl Into<SensingRef<'a>>,
    order: usize,
    subset_limit: u128,
) -> Result<RipConstant> {
    let cols = Columns::new(phi.into());
    let m = cols.len();
    if order == 0 || order > m {
        return Err(Error::InvalidInput(format!(
            "order must lie in 1..={m}, got {order}"
        )));
    }
    if order > MAX_ORDER {
        return Err(Error::TooLarge {
            what: "RIP order",
            size: order as u128,
            limit: MAX_ORDER as u128,
        });
    }
    let subsets = binomial(m as u64, order as u64);
    if subsets > subset_limit.into() {
        return Err(Error::TooLarge {
            what: "subsets in exact RIP scan",
            size: u128::try_from(&subsets).unwrap_or(u128::MAX),
            limit: subset_limit,
        });
    }
    // Each worker scans the subsets with a fixed smallest index.
    let best = (0..=m - order)
        .into_par_iter()
        .map(|first| scan_with_first(&cols, m, order, first))
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
        .expect("at least one subset");
    Ok(RipConstant {
        order,
        delta: best.0,
        witness: best.1.iter().map(|&i| i as u64 + 1).collect(),
        method: "exhaustive".into(),
    })
}

fn scan_with_first(cols: &Columns, m: usize, order: usize, first: usize) -> (f64, Vec<usize>) {
    let mut scratch = DenseMatrix::zeros(order, order);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let _ = for_each_subset_with_first(m, order, first, |q| {
        fill_gram(cols, q, &mut scratch);
        let d = deviation(&scratch);
        if d > best.0 {
            best = (d, q.to_vec());
        }
        ControlFlow::<()>::Continue(())
    });
    best
}

/// Visits the size-`order` subsets of `0..m` whose smallest element is
/// `first`, in lexicographic order.
pub(super) fn for_each_subset_with_first<T>(
    m: usize,
    order: usize,
    first: usize,
    mut f: impl FnMut(&[usize]) -> ControlFlow<T>,
) -> ControlFlow<T> {
    if order == 0 || first + order > m {
        return ControlFlow::Continue(());
    }
    let mut q: Vec<usize> = (first..first + order).collect();
    loop {
        f(&q)?;
        let mut i = order;
        loop {
            if i == 1 {
                return ControlFlow::Continue(());
            }
            i -= 1;
            if q[i] < m - order + i {
                break;
            }
        }
        q[i] += 1;
        for t in i + 1..order {
            q[t] = q[t - 1] + 1;
        }
    }
}

/// Integer numerator `max_{i≠j} |p − 2 d(c_i, c_j)|` of the exact incoherence.
pub fn exact_incoherence_numerator(s: &CompactSensingMatrix) -> Result<u64> {
    let m = s.m() as u128;
    let pairs = m * m.saturating_sub(1) / 2;
    if pairs > PAIR_LIMIT {
        return Err(Error::TooLarge {
            what: "column pairs",
            size: pairs,
            limit: PAIR_LIMIT,
        });
    }
    let p = s.p() as i64;
    let words: Vec<Vec<u64>> = s
        .codewords()
        .into_iter()
        .map(|c| c.into_bits().words().to_vec())
        .collect();
    let best = (0..words.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0u64;
            for j in i + 1..words.len() {
                let d: u32 = words[i]
                    .iter()
                    .zip(&words[j])
                    .map(|(a, b)| (a ^ b).count_ones())
                    .sum();
                best = best.max((p - 2 * d as i64).unsigned_abs());
            }
            best
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// `μ(Φ) = max_{i≠j} |φᵢᵀφⱼ|`, exact up to the final division by `p`.
pub fn exact_incoherence(s: &CompactSensingMatrix) -> Result<f64> {
    Ok(exact_incoherence_numerator(s)? as f64 / s.p() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BinaryMatrix;

    fn compact(rows: &[&str]) -> CompactSensingMatrix {
        CompactSensingMatrix::from_generator(&BinaryMatrix::from_bit_strs(rows).unwrap()).unwrap()
    }

    #[test]
    fn orthogonal_code_has_zero_constants() {
        let s = compact(&["1100", "0110"]);
        assert_eq!(exact_incoherence(&s).unwrap(), 0.0);
        for order in 1..=3 {
            let rip = exact_rip_constant(&s, order).unwrap();
            assert!(rip.delta.abs() < 1e-12, "order {order}: {}", rip.delta);
        }
    }

    #[test]
    fn antipodal_pair_gives_unit_incoherence() {
        let s = compact(&["1111", "1100"]);
        assert_eq!(exact_incoherence(&s).unwrap(), 1.0);
    }

    #[test]
    fn order_one_and_two() {
        let s = compact(&["11100000", "00111000", "10000111"]);
        let mu = exact_incoherence(&s).unwrap();
        assert_eq!(exact_rip_constant(&s, 1).unwrap().delta, 0.0);
        let d2 = exact_rip_constant(&s, 2).unwrap();
        assert!((d2.delta - mu).abs() < 1e-12);
        let g = gram_submatrix(&s, &d2.witness).unwrap();
        assert!((g.gram().get(0, 1).abs() - mu).abs() < 1e-15);
    }

    #[test]
    fn witness_is_lexicographically_first() {
        // Order 1 ties everywhere: the first column wins.
        let s = compact(&["11100000", "00111000"]);
        assert_eq!(exact_rip_constant(&s, 1).unwrap().witness, vec![1]);
    }

    #[test]
    fn dense_input_matches_compact() {
        let s = compact(&["11100000", "00111000", "10000111"]);
        let dense = s.materialize().unwrap();
        for order in 1..=4 {
            let a = exact_rip_constant(&s, order).unwrap();
            let b = exact_rip_constant(&dense, order).unwrap();
            assert!((a.delta - b.delta).abs() < 1e-12);
        }
    }

    #[test]
    fn guards() {
        let s = compact(&["11100000", "00111000", "10000111"]);
        assert!(matches!(
            exact_rip_constant(&s, 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            exact_rip_constant(&s, 8),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            exact_rip_constant_with_limit(&s, 3, 34),
            Err(Error::TooLarge { .. })
        ));
        assert!(exact_rip_constant_with_limit(&s, 3, 35).is_ok());
        assert!(gram_submatrix(&s, &[2, 1]).is_err());
        assert!(gram_submatrix(&s, &[0]).is_err());
    }

    #[test]
    fn json_shape() {
        let s = compact(&["1100", "0110"]);
        let v = serde_json::to_value(exact_rip_constant(&s, 2).unwrap()).unwrap();
        assert_eq!(v["order"], 2);
        assert_eq!(v["method"], "exhaustive");
        assert_eq!(v["witness"], serde_json::json!([1, 2]));
    }
}
