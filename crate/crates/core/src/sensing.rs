//! Bipolar sensing matrices whose columns are `β_p(c)` for nonzero codewords `c`.
//!
//! A [`CompactSensingMatrix`] stores only a generator matrix; columns are
//! re-derived on demand, so storage is `p·(p−r)` bits plus a fixed header.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{
    encode_message, generator_from_parity_check, BinaryMatrix, BitVector, Codeword, CountingWalk,
    MatrixFile,
};
use crate::linalg::DenseMatrix;

/// Columns handled per block in streaming products. Block boundaries are
/// fixed, so results do not depend on the worker count.
const BLOCK_COLUMNS: u64 = 1024;

/// Largest column count accepted by [`CompactSensingMatrix::materialize`].
pub const MAX_DENSE_COLUMNS: u64 = 1 << 16;

/// A length-`p` vector with entries `±1/√p`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipolarColumn(Vec<f64>);

impl BipolarColumn {
    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.0)
    }

    pub fn dot(&self, other: &BipolarColumn) -> f64 {
        crate::linalg::dot(&self.0, &other.0)
    }
}

/// `β_p(x) = (e − 2x)/√p`.
pub fn bipolarize(x: &BitVector) -> BipolarColumn {
    let a = 1.0 / (x.len() as f64).sqrt();
    BipolarColumn(x.iter().map(|b| if b { -a } else { a }).collect())
}

/// `β_p(a)ᵀβ_p(b) = 1 − 2d/p` for words at Hamming distance `d`.
pub fn inner_product_via_distance(d: usize, p: usize) -> f64 {
    (p as f64 - 2.0 * d as f64) / p as f64
}

/// Sensing matrix `Φ(H)` represented by a generator of its column code.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactSensingMatrix {
    generator: BinaryMatrix,
    p: usize,
    r: usize,
    m: u64,
    scale: f64,
}

pub const SENSING_FORMAT: &str = "codesense/v1";
const MAGIC: &[u8; 4] = b"CSM1";
/// Magic, `p` and `r` (little-endian `u32`).
pub const BINARY_HEADER_BYTES: usize = 12;

impl CompactSensingMatrix {
    /// Builds `Φ(H)` from an `r × p` parity-check matrix.
    ///
    /// Columns come from the subcode spanned by the first `p − r` canonical
    /// generator rows, which gives exactly `m = 2^{p−r} − 1` distinct columns
    /// even when `rank(H) < r`.
    pub fn build(h: &BinaryMatrix) -> Result<Self> {
        let (r, p) = (h.rows(), h.cols());
        if p <= r {
            return Err(Error::AssumptionViolated(format!(
                "need p > r, got p = {p}, r = {r}"
            )));
        }
        let k = p - r;
        if k <= 63 && (1u128 << k) < p as u128 {
            return Err(Error::AssumptionViolated(format!(
                "2^(p-r) >= p fails: 2^{k} < {p}"
            )));
        }
        if k > 62 {
            return Err(Error::TooLarge {
                what: "p - r",
                size: k as u128,
                limit: 62,
            });
        }
        let g = generator_from_parity_check(h)?;
        Ok(Self::assemble(g.top_rows(k), r))
    }

    /// Uses every row of a full-rank generator; `r` is taken as `p − k`.
    pub fn from_generator(g: &BinaryMatrix) -> Result<Self> {
        let k = g.rows();
        if k >= g.cols() {
            return Err(Error::InvalidInput(format!(
                "generator has {k} rows but only {} columns",
                g.cols()
            )));
        }
        if k > 62 {
            return Err(Error::TooLarge {
                what: "generator rows",
                size: k as u128,
                limit: 62,
            });
        }
        if g.rank() != k {
            return Err(Error::InvalidInput(
                "generator rows are linearly dependent".into(),
            ));
        }
        Ok(Self::assemble(g.clone(), g.cols() - k))
    }

    fn assemble(generator: BinaryMatrix, r: usize) -> Self {
        let p = generator.cols();
        let m = (1u64 << generator.rows()) - 1;
        Self {
            generator,
            p,
            r,
            m,
            scale: 1.0 / (p as f64).sqrt(),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn generator(&self) -> &BinaryMatrix {
        &self.generator
    }

    fn check_index(&self, j: u64) -> Result<()> {
        if j == 0 || j > self.m {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.m,
            });
        }
        Ok(())
    }

    /// Codeword `c_j`, for `j` in `1..=m`.
    pub fn codeword(&self, j: u64) -> Result<Codeword> {
        self.check_index(j)?;
        Ok(Codeword::new(encode_message(&self.generator, j)))
    }

    /// Column `β_p(c_j)`, for `j` in `1..=m`.
    pub fn column(&self, j: u64) -> Result<BipolarColumn> {
        Ok(bipolarize(self.codeword(j)?.bits()))
    }

    /// All nonzero codewords in column order.
    pub fn codewords(&self) -> Vec<Codeword> {
        crate::gf2::enumerate_codewords(&self.generator, self.m)
            .expect("m never exceeds the code size")
            .collect()
    }

    /// Dense `p × m` matrix. Intended for oracle tests only.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        if self.m > MAX_DENSE_COLUMNS {
            return Err(Error::TooLarge {
                what: "dense materialization columns",
                size: self.m as u128,
                limit: MAX_DENSE_COLUMNS as u128,
            });
        }
        let cols: Vec<Vec<f64>> = self
            .codewords()
            .iter()
            .map(|c| bipolarize(c.bits()).into_vec())
            .collect();
        DenseMatrix::from_columns(self.p, &cols)
    }

    fn blocks(&self) -> Vec<(u64, u64)> {
        (0..self.m.div_ceil(BLOCK_COLUMNS))
            .map(|b| {
                let start = 1 + b * BLOCK_COLUMNS;
                (start, (start + BLOCK_COLUMNS).min(self.m + 1))
            })
            .collect()
    }

    /// `Φ x`, streamed over the columns with `O(p)` extra memory per block.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() as u64 != self.m {
            return Err(Error::LengthMismatch {
                expected: self.m as usize,
                found: x.len(),
            });
        }
        let p = self.p;
        let partials: Vec<Vec<f64>> = self
            .blocks()
            .into_par_iter()
            .map(|(start, end)| {
                let mut acc = vec![0.0; p];
                let mut walk = CountingWalk::new(&self.generator, start);
                loop {
                    let j = walk.message();
                    let xj = x[(j - 1) as usize];
                    if xj != 0.0 {
                        let a = xj * self.scale;
                        accumulate_signed(&mut acc, walk.current(), a);
                    }
                    if j + 1 >= end {
                        break;
                    }
                    walk.advance();
                }
                acc
            })
            .collect();
        Ok(pairwise_sum(&partials, p))
    }

    /// `Φᵀ y`.
    pub fn rmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.p {
            return Err(Error::LengthMismatch {
                expected: self.p,
                found: y.len(),
            });
        }
        let total: f64 = y.iter().sum();
        let blocks: Vec<Vec<f64>> = self
            .blocks()
            .into_par_iter()
            .map(|(start, end)| {
                let mut out = Vec::with_capacity((end - start) as usize);
                let mut walk = CountingWalk::new(&self.generator, start);
                loop {
                    // Σ_i y_i (1 − 2 c_i) / √p
                    let ones = sum_where_set(y, walk.current());
                    out.push((total - 2.0 * ones) * self.scale);
                    if walk.message() + 1 >= end {
                        break;
                    }
                    walk.advance();
                }
                out
            })
            .collect();
        Ok(blocks.concat())
    }

    /// `Φ Φᵀ` from integer counts: entry `(a, b)` is `Σ_j (−1)^{c_ja + c_jb} / p`.
    pub fn row_gram(&self) -> DenseMatrix {
        let p = self.p;
        let mut counts = vec![0i64; p * p];
        let mut walk = CountingWalk::new(&self.generator, 1);
        for j in 1..=self.m {
            let w = walk.current();
            for a in 0..p {
                let ca = w[a / 64] >> (a % 64) & 1;
                for b in a..p {
                    let cb = w[b / 64] >> (b % 64) & 1;
                    counts[a * p + b] += if ca == cb { 1 } else { -1 };
                }
            }
            if j < self.m {
                walk.advance();
            }
        }
        let mut g = DenseMatrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let v = counts[a * p + b] as f64 / p as f64;
                g.set(a, b, v);
                g.set(b, a, v);
            }
        }
        g
    }

    /// Compact binary encoding: `"CSM1"`, `p`, `r`, then the generator bits
    /// packed row-major and MSB-first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.p as u32).to_le_bytes());
        out.extend_from_slice(&(self.r as u32).to_le_bytes());
        out.extend_from_slice(&self.generator.to_packed_bits());
        out
    }

    pub fn serialized_len(&self) -> usize {
        BINARY_HEADER_BYTES + (self.p * self.generator.rows()).div_ceil(8)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let malformed = |position: usize, reason: &str| Error::MalformedPayload {
            position,
            reason: reason.to_string(),
        };
        if bytes.len() < BINARY_HEADER_BYTES {
            return Err(malformed(bytes.len(), "truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(malformed(0, "bad magic"));
        }
        let p = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let r = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        if p == 0 || r >= p || p - r > 62 {
            return Err(malformed(4, "invalid dimensions"));
        }
        let k = p - r;
        let expected = (p * k).div_ceil(8);
        let payload = &bytes[BINARY_HEADER_BYTES..];
        if payload.len() != expected {
            return Err(malformed(
                BINARY_HEADER_BYTES + payload.len().min(expected),
                if payload.len() < expected {
                    "truncated generator bits"
                } else {
                    "trailing bytes"
                },
            ));
        }
        let g = BinaryMatrix::from_packed_bits(k, p, payload).map_err(|e| match e {
            Error::MalformedPayload { position, reason } => Error::MalformedPayload {
                position: position + BINARY_HEADER_BYTES,
                reason,
            },
            other => other,
        })?;
        if g.rank() != k {
            return Err(malformed(
                BINARY_HEADER_BYTES,
                "generator rows are dependent",
            ));
        }
        Ok(Self::assemble(g, r))
    }

    pub fn to_file(&self) -> SensingFile {
        SensingFile {
            format: SENSING_FORMAT.to_string(),
            p: self.p,
            r: self.r,
            m: self.m,
            generator: MatrixFile::from(self.generator.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("sensing file serializes")
    }

    pub fn from_file(file: SensingFile) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedPayload {
            position: 0,
            reason,
        };
        if file.format != SENSING_FORMAT {
            return Err(malformed(format!("unknown format tag {:?}", file.format)));
        }
        let g = BinaryMatrix::try_from(file.generator)?;
        if g.cols() != file.p || file.r >= file.p || g.rows() != file.p - file.r {
            return Err(malformed("generator shape disagrees with p and r".into()));
        }
        let s = Self::from_generator(&g).map_err(|e| malformed(e.to_string()))?;
        if s.m != file.m {
            return Err(malformed(format!(
                "m = {} but the generator gives {}",
                file.m, s.m
            )));
        }
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SensingFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedPayload {
                position: e.column(),
                reason: e.to_string(),
            })?;
        Self::from_file(file)
    }
}

/// `codesense/v1` sensing-matrix record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensingFile {
    pub format: String,
    pub p: usize,
    pub r: usize,
    pub m: u64,
    pub generator: MatrixFile,
}

#[inline]
fn accumulate_signed(acc: &mut [f64], word: &[u64], a: f64) {
    for (i, yi) in acc.iter_mut().enumerate() {
        if word[i / 64] >> (i % 64) & 1 == 1 {
            *yi -= a;
        } else {
            *yi += a;
        }
    }
}

#[inline]
fn sum_where_set(y: &[f64], word: &[u64]) -> f64 {
    let mut s = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        if word[i / 64] >> (i % 64) & 1 == 1 {
            s += yi;
        }
    }
    s
}

/// Fixed-shape pairwise reduction of equal-length vectors.
fn pairwise_sum(parts: &[Vec<f64>], len: usize) -> Vec<f64> {
    match parts.len() {
        0 => vec![0.0; len],
        1 => parts[0].clone(),
        n => {
            let (a, b) = parts.split_at(n / 2);
            let mut left = pairwise_sum(a, len);
            let right = pairwise_sum(b, len);
            left.iter_mut().zip(&right).for_each(|(x, y)| *x += y);
            left
        }
    }
}
