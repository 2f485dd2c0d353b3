//! Bit-packed linear algebra over F₂.
//!
//! Rows are stored as little-endian `u64` words (bit `c % 64` of word `c / 64`
//! holds column `c`). That layout is internal; the only normative byte order is
//! the serialized one, which is row-major and most-significant-bit first.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

#[inline]
pub(crate) fn popcount(words: &[u64]) -> u32 {
    words.iter().map(|w| w.count_ones()).sum()
}

/// A fixed-length vector over F₂.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub(crate) fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.truncate(words_for(len));
        words.resize(words_for(len), 0);
        if !len.is_multiple_of(WORD_BITS) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % WORD_BITS)) - 1;
            }
        }
        Self { len, words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Hamming weight.
    pub fn weight(&self) -> u32 {
        popcount(&self.words)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        let mut out = self.clone();
        xor_into(&mut out.words, &other.words);
        Ok(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut v = BitVector::zeros(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set(i, true),
                other => {
                    return Err(Error::InvalidInput(format!(
                        "'{other}' is not a binary digit"
                    )))
                }
            }
        }
        Ok(v)
    }
}

/// A codeword together with its cached Hamming weight.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Codeword {
    bits: BitVector,
    weight: u32,
}

impl Codeword {
    pub fn new(bits: BitVector) -> Self {
        let weight = bits.weight();
        Self { bits, weight }
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> BitVector {
        self.bits
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bits.fmt(f)
    }
}

/// `w_h(a XOR b)`.
pub fn hamming_distance(a: &Codeword, b: &Codeword) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.bits
        .words
        .iter()
        .zip(&b.bits.words)
        .map(|(x, y)| (x ^ y).count_ones())
        .sum())
}

/// Dense bit-packed matrix over F₂. Holds parity-check and generator matrices.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Result of reducing a matrix to reduced row echelon form.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub matrix: BinaryMatrix,
    /// Pivot column of each of the first `rank` rows, strictly increasing.
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl BinaryMatrix {
    /// All-zero matrix. Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows >= 1 && cols >= 1,
            "a binary matrix needs at least one row and one column"
        );
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[BitVector]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidInput("matrix needs at least one row".into()))?;
        let cols = first.len();
        if cols == 0 {
            return Err(Error::InvalidInput(
                "matrix needs at least one column".into(),
            ));
        }
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            m.row_words_mut(i).copy_from_slice(row.words());
        }
        Ok(m)
    }

    /// Parses rows written as `"1100"` strings.
    pub fn from_bit_strs(rows: &[&str]) -> Result<Self> {
        let rows: Vec<BitVector> = rows.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }

    /// Builds a matrix from row-major bits, `bits(i, j)` giving entry (i, j).
    pub fn from_fn(rows: usize, cols: usize, mut bits: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if bits(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        self.data[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.stride + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub(crate) fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVector {
        BitVector::from_words(self.cols, self.row_words(r).to_vec())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * s);
        head[lo * s..(lo + 1) * s].swap_with_slice(&mut tail[..s]);
    }

    /// `row[dst] ^= row[src]`, touching only words from `from_word` on.
    fn xor_row(&mut self, dst: usize, src: usize, from_word: usize) {
        let s = self.stride;
        debug_assert_ne!(dst, src);
        let (d, sr) = if dst < src {
            let (head, tail) = self.data.split_at_mut(src * s);
            (&mut head[dst * s..(dst + 1) * s], &tail[..s])
        } else {
            let (head, tail) = self.data.split_at_mut(dst * s);
            (&mut tail[..s], &head[src * s..(src + 1) * s])
        };
        xor_into(&mut d[from_word..], &sr[from_word..]);
    }

    /// Reduced row echelon form by Gauss-Jordan elimination on a copy.
    pub fn reduced_row_echelon(&self) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::with_capacity(self.rows.min(self.cols));
        let mut pivot_row = 0;
        for c in 0..self.cols {
            if pivot_row == m.rows {
                break;
            }
            let word = c / WORD_BITS;
            let mask = 1u64 << (c % WORD_BITS);
            let Some(found) =
                (pivot_row..m.rows).find(|&i| m.data[i * m.stride + word] & mask != 0)
            else {
                continue;
            };
            m.swap_rows(found, pivot_row);
            for i in 0..m.rows {
                if i != pivot_row && m.data[i * m.stride + word] & mask != 0 {
                    m.xor_row(i, pivot_row, word);
                }
            }
            pivots.push(c);
            pivot_row += 1;
        }
        Echelon { matrix: m, pivots }
    }

    /// Rank over F₂. Does not mutate `self`.
    pub fn rank(&self) -> usize {
        self.reduced_row_echelon().rank()
    }

    /// `M · x` over F₂.
    pub fn mul_vec(&self, x: &BitVector) -> Result<BitVector> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut out = BitVector::zeros(self.rows);
        for i in 0..self.rows {
            let parity: u32 = self
                .row_words(i)
                .iter()
                .zip(x.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            out.set(i, parity & 1 == 1);
        }
        Ok(out)
    }

    /// `self · otherᵀ` over F₂; both operands must have the same column count.
    pub fn mul_transpose(&self, other: &BinaryMatrix) -> Result<BinaryMatrix> {
        if other.cols != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        Ok(BinaryMatrix::from_fn(self.rows, other.rows, |i, j| {
            let parity: u32 = self
                .row_words(i)
                .iter()
                .zip(other.row_words(j))
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            parity & 1 == 1
        }))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// The first `count` rows as a new matrix.
    pub fn top_rows(&self, count: usize) -> BinaryMatrix {
        assert!(count >= 1 && count <= self.rows);
        Self {
            rows: count,
            cols: self.cols,
            stride: self.stride,
            data: self.data[..count * self.stride].to_vec(),
        }
    }

    /// Rows reordered so that row `i` of the result is row `order[i]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<BinaryMatrix> {
        if order.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                found: order.len(),
            });
        }
        let mut seen = vec![false; self.rows];
        let mut out = self.clone();
        for (i, &src) in order.iter().enumerate() {
            if src >= self.rows || std::mem::replace(&mut seen[src], true) {
                return Err(Error::InvalidInput("row order is not a permutation".into()));
            }
            out.row_words_mut(i).copy_from_slice(self.row_words(src));
        }
        Ok(out)
    }

    /// Serialized bytes of row `r`: `⌈cols/8⌉` bytes, MSB-first, trailing bits zero.
    pub fn row_bytes(&self, r: usize) -> Vec<u8> {
        let mut bytes = vec![0u8; self.cols.div_ceil(8)];
        for c in 0..self.cols {
            if self.get(r, c) {
                bytes[c / 8] |= 0x80 >> (c % 8);
            }
        }
        bytes
    }

    fn set_row_from_bytes(&mut self, r: usize, bytes: &[u8]) -> std::result::Result<(), String> {
        if bytes.len() != self.cols.div_ceil(8) {
            return Err(format!(
                "row {r} has {} bytes, expected {}",
                bytes.len(),
                self.cols.div_ceil(8)
            ));
        }
        for (b, &byte) in bytes.iter().enumerate() {
            for t in 0..8 {
                let c = b * 8 + t;
                let bit = byte & (0x80 >> t) != 0;
                if c >= self.cols {
                    if bit {
                        return Err(format!("row {r} has nonzero padding bits"));
                    }
                } else if bit {
                    self.set(r, c, true);
                }
            }
        }
        Ok(())
    }

    /// Bits of the whole matrix packed contiguously, row-major and MSB-first,
    /// with no per-row padding. Exactly `⌈rows·cols/8⌉` bytes.
    pub fn to_packed_bits(&self) -> Vec<u8> {
        let total = self.rows * self.cols;
        let mut out = vec![0u8; total.div_ceil(8)];
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    let t = r * self.cols + c;
                    out[t / 8] |= 0x80 >> (t % 8);
                }
            }
        }
        out
    }

    /// Inverse of [`BinaryMatrix::to_packed_bits`].
    pub fn from_packed_bits(rows: usize, cols: usize, bytes: &[u8]) -> Result<BinaryMatrix> {
        let total = rows * cols;
        if bytes.len() != total.div_ceil(8) {
            return Err(Error::MalformedPayload {
                position: bytes.len(),
                reason: format!("expected {} bit-payload bytes", total.div_ceil(8)),
            });
        }
        let mut m = BinaryMatrix::zeros(rows, cols);
        for (i, &byte) in bytes.iter().enumerate() {
            for t in 0..8 {
                let idx = i * 8 + t;
                let bit = byte & (0x80 >> t) != 0;
                if idx >= total {
                    if bit {
                        return Err(Error::MalformedPayload {
                            position: i,
                            reason: "nonzero padding bits".into(),
                        });
                    }
                } else if bit {
                    m.set(idx / cols, idx % cols, true);
                }
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixFile::from(self.clone())).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<BinaryMatrix> {
        let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::MalformedPayload {
            position: e.column(),
            reason: e.to_string(),
        })?;
        BinaryMatrix::try_from(file)
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        write!(f, "]")
    }
}

pub const MATRIX_FORMAT: &str = "gf2-matrix/v1";

/// On-disk `gf2-matrix/v1` record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub format: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<String>,
}

impl From<BinaryMatrix> for MatrixFile {
    fn from(m: BinaryMatrix) -> Self {
        MatrixFile {
            format: MATRIX_FORMAT.to_string(),
            rows: m.rows,
            cols: m.cols,
            data: (0..m.rows).map(|r| hex::encode(m.row_bytes(r))).collect(),
        }
    }
}

impl TryFrom<MatrixFile> for BinaryMatrix {
    type Error = Error;

    fn try_from(file: MatrixFile) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedPayload {
            position: 0,
            reason,
        };
        if file.format != MATRIX_FORMAT {
            return Err(malformed(format!("unknown format tag {:?}", file.format)));
        }
        if file.rows == 0 || file.cols == 0 {
            return Err(malformed("rows and cols must be positive".into()));
        }
        if file.data.len() != file.rows {
            return Err(malformed(format!(
                "{} data rows for a {}-row matrix",
                file.data.len(),
                file.rows
            )));
        }
        let mut m = BinaryMatrix::zeros(file.rows, file.cols);
        for (r, text) in file.data.iter().enumerate() {
            if text.chars().any(|c| c.is_ascii_uppercase()) {
                return Err(malformed(format!("row {r} must use lowercase hex")));
            }
            let bytes = hex::decode(text).map_err(|e| malformed(format!("row {r}: {e}")))?;
            m.set_row_from_bytes(r, &bytes).map_err(malformed)?;
        }
        Ok(m)
    }
}

/// Generator of the nullspace code `C(H) = {x : Hx = 0}` in canonical form:
/// the reduced row echelon form of a nullspace basis, rows ordered by
/// leading column. Deterministic in `H`.
pub fn generator_from_parity_check(h: &BinaryMatrix) -> Result<BinaryMatrix> {
    let ech = h.reduced_row_echelon();
    let p = h.cols();
    if ech.rank() == p {
        return Err(Error::DegenerateCode);
    }
    let mut is_pivot = vec![false; p];
    for &c in &ech.pivots {
        is_pivot[c] = true;
    }
    let basis: Vec<BitVector> = (0..p)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = BitVector::zeros(p);
            v.set(f, true);
            for (i, &pc) in ech.pivots.iter().enumerate() {
                if ech.matrix.get(i, f) {
                    v.set(pc, true);
                }
            }
            v
        })
        .collect();
    let g = BinaryMatrix::from_rows(&basis)?;
    Ok(g.reduced_row_echelon().matrix)
}

/// Codeword `u·G` computed directly. Bit `k−1−i` of `message` (counting from
/// the least significant bit) selects row `i`, so the first row is the most
/// significant message bit.
pub fn encode_message(g: &BinaryMatrix, message: u64) -> BitVector {
    let k = g.rows();
    let mut acc = vec![0u64; g.stride()];
    for i in 0..k {
        let shift = k - 1 - i;
        if shift < 64 && message >> shift & 1 == 1 {
            xor_into(&mut acc, g.row_words(i));
        }
    }
    BitVector::from_words(g.cols(), acc)
}

pub(crate) fn max_message_count(k: usize) -> Result<u64> {
    if k > 63 {
        return Err(Error::TooLarge {
            what: "generator dimension",
            size: k as u128,
            limit: 63,
        });
    }
    Ok((1u64 << k) - 1)
}

/// Incremental walk over `u·G` for `u = start, start+1, …` in counting order.
///
/// Going from `u` to `u+1` flips the low `t+1` message bits, `t` being the
/// number of trailing ones of `u`. Precomputing the XOR of the rows selected by
/// each such low-bit mask makes every step a single row-sized XOR.
pub(crate) struct CountingWalk<'a> {
    g: &'a BinaryMatrix,
    masks: Vec<u64>,
    current: Vec<u64>,
    message: u64,
}

impl<'a> CountingWalk<'a> {
    pub(crate) fn new(g: &'a BinaryMatrix, start: u64) -> Self {
        let k = g.rows();
        let s = g.stride();
        let mut masks = vec![0u64; k * s];
        let mut acc = vec![0u64; s];
        for t in 0..k {
            xor_into(&mut acc, g.row_words(k - 1 - t));
            masks[t * s..(t + 1) * s].copy_from_slice(&acc);
        }
        let current = encode_message(g, start).words;
        Self {
            g,
            masks,
            current,
            message: start,
        }
    }

    #[inline]
    pub(crate) fn message(&self) -> u64 {
        self.message
    }

    #[inline]
    pub(crate) fn current(&self) -> &[u64] {
        &self.current
    }

    #[inline]
    pub(crate) fn advance(&mut self) {
        let t = self.message.trailing_ones() as usize;
        let s = self.g.stride();
        xor_into(&mut self.current, &self.masks[t * s..(t + 1) * s]);
        self.message += 1;
    }
}

/// Iterator over the first `limit` nonzero codewords in canonical message order.
pub struct CodewordIter<'a> {
    walk: CountingWalk<'a>,
    remaining: u64,
}

impl Iterator for CodewordIter<'_> {
    type Item = Codeword;

    fn next(&mut self) -> Option<Codeword> {
        if self.remaining == 0 {
            return None;
        }
        self.walk.advance();
        self.remaining -= 1;
        Some(Codeword::new(BitVector::from_words(
            self.walk.g.cols(),
            self.walk.current().to_vec(),
        )))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Codewords `u·G` for `u = 1, 2, …, limit`.
pub fn enumerate_codewords(g: &BinaryMatrix, limit: u64) -> Result<CodewordIter<'_>> {
    let available = max_message_count(g.rows())?;
    if limit > available {
        return Err(Error::LimitTooLarge { limit, available });
    }
    Ok(CodewordIter {
        walk: CountingWalk::new(g, 0),
        remaining: limit,
    })
}

/// Visits the codewords whose Gray-code indices lie in `[start, end)` of
/// `0..2^k`, one row XOR per step. Index 0 is the zero codeword. Order is the
/// Gray walk, not counting order, so use this only for order-free statistics.
pub(crate) fn gray_walk<F>(g: &BinaryMatrix, start: u64, end: u64, mut visit: F) -> ControlFlow<()>
where
    F: FnMut(&[u64]) -> ControlFlow<()>,
{
    if start >= end {
        return ControlFlow::Continue(());
    }
    let s = g.stride();
    let mut current = vec![0u64; s];
    let gray = start ^ (start >> 1);
    for b in 0..g.rows().min(64) {
        if gray >> b & 1 == 1 {
            xor_into(&mut current, g.row_words(b));
        }
    }
    visit(&current)?;
    if s == 1 {
        let mut word = current[0];
        for i in start + 1..end {
            word ^= g.data[i.trailing_zeros() as usize];
            visit(std::slice::from_ref(&word))?;
        }
    } else {
        for i in start + 1..end {
            xor_into(&mut current, g.row_words(i.trailing_zeros() as usize));
            visit(&current)?;
        }
    }
    ControlFlow::Continue(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn m(rows: &[&str]) -> BinaryMatrix {
        BinaryMatrix::from_bit_strs(rows).unwrap()
    }

    fn span(g: &BinaryMatrix) -> HashSet<BitVector> {
        (0..1u64 << g.rows())
            .map(|u| encode_message(g, u))
            .collect()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(BinaryMatrix::identity(3).rank(), 3);
        assert_eq!(BinaryMatrix::zeros(2, 4).rank(), 0);
        let h = m(&["1100", "0011", "1111"]);
        // brute force: size of span is 2^rank
        let span_size = span(&h).len();
        assert_eq!(span_size, 4);
        assert_eq!(h.rank(), 2);
        // the original is untouched
        assert_eq!(h, m(&["1100", "0011", "1111"]));
    }

    #[test]
    fn rank_across_word_boundary() {
        let mut h = BinaryMatrix::zeros(3, 130);
        h.set(0, 0, true);
        h.set(0, 129, true);
        h.set(1, 64, true);
        h.set(2, 0, true);
        h.set(2, 129, true);
        h.set(2, 64, true);
        assert_eq!(h.rank(), 2);
    }

    #[test]
    fn generator_single_parity() {
        let h = m(&["1111"]);
        let g = generator_from_parity_check(&h).unwrap();
        assert_eq!(g.rows(), 3);
        assert_eq!(g.rank(), 3);
        assert!(h.mul_transpose(&g).unwrap().is_zero());
        for r in 0..3 {
            assert_eq!(g.row(r).weight() % 2, 0);
        }
    }

    #[test]
    fn generator_of_zero_map_is_identity() {
        let g = generator_from_parity_check(&BinaryMatrix::zeros(2, 4)).unwrap();
        assert_eq!(g, BinaryMatrix::identity(4));
    }

    #[test]
    fn generator_two_blocks_matches_exhaustive_nullspace() {
        let h = m(&["1100", "0011"]);
        let g = generator_from_parity_check(&h).unwrap();
        assert_eq!(g.rows(), 2);
        let nullspace: HashSet<BitVector> = (0..16u32)
            .map(|x| BitVector::from_bools(&[x & 8 != 0, x & 4 != 0, x & 2 != 0, x & 1 != 0]))
            .filter(|v| h.mul_vec(v).unwrap().is_zero())
            .collect();
        assert_eq!(span(&g), nullspace);
        assert_eq!(g, m(&["1100", "0011"]));
    }

    #[test]
    fn generator_rejects_full_rank() {
        assert_eq!(
            generator_from_parity_check(&BinaryMatrix::identity(3)),
            Err(Error::DegenerateCode)
        );
    }

    #[test]
    fn enumeration_examples() {
        let g = m(&["1100", "0011"]);
        let words: HashSet<String> = enumerate_codewords(&g, 3)
            .unwrap()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(
            words,
            ["1100", "0011", "1111"]
                .iter()
                .map(|s| s.to_string())
                .collect()
        );
        assert_eq!(enumerate_codewords(&g, 0).unwrap().count(), 0);
        let words: HashSet<String> = enumerate_codewords(&BinaryMatrix::identity(2), 3)
            .unwrap()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(
            words,
            ["01", "10", "11"].iter().map(|s| s.to_string()).collect()
        );
        assert!(matches!(
            enumerate_codewords(&g, 4),
            Err(Error::LimitTooLarge { .. })
        ));
    }

    #[test]
    fn counting_order_puts_first_row_on_msb() {
        let g = m(&["1100", "0110"]);
        let words: Vec<String> = enumerate_codewords(&g, 3)
            .unwrap()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(words, ["0110", "1100", "1010"]);
    }

    #[test]
    fn hamming_distance_examples() {
        let c = |s: &str| Codeword::new(s.parse().unwrap());
        assert_eq!(hamming_distance(&c("0000"), &c("1100")).unwrap(), 2);
        assert_eq!(hamming_distance(&c("1011"), &c("1011")).unwrap(), 0);
        assert_eq!(hamming_distance(&c("1010"), &c("0101")).unwrap(), 4);
        assert!(matches!(
            hamming_distance(&c("10"), &c("101")),
            Err(Error::LengthMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn json_format_is_msb_first_lowercase() {
        let h = m(&["100000001", "011111111"]);
        let json = h.to_json();
        assert_eq!(
            json,
            r#"{"format":"gf2-matrix/v1","rows":2,"cols":9,"data":["8080","7f80"]}"#
        );
        assert_eq!(BinaryMatrix::from_json(&json).unwrap(), h);
    }

    #[test]
    fn json_rejects_bad_padding_and_lengths() {
        let bad_pad = r#"{"format":"gf2-matrix/v1","rows":1,"cols":9,"data":["80c0"]}"#;
        assert!(matches!(
            BinaryMatrix::from_json(bad_pad),
            Err(Error::MalformedPayload { .. })
        ));
        let short = r#"{"format":"gf2-matrix/v1","rows":1,"cols":9,"data":["80"]}"#;
        assert!(BinaryMatrix::from_json(short).is_err());
        let tag = r#"{"format":"gf2-matrix/v2","rows":1,"cols":8,"data":["80"]}"#;
        assert!(BinaryMatrix::from_json(tag).is_err());
        let upper = r#"{"format":"gf2-matrix/v1","rows":1,"cols":8,"data":["AB"]}"#;
        assert!(BinaryMatrix::from_json(upper).is_err());
    }

    #[test]
    fn gray_walk_covers_span() {
        let g = m(&["1100", "0110", "0001"]);
        let mut seen = HashSet::new();
        let _ = gray_walk(&g, 0, 8, |w| {
            seen.insert(BitVector::from_words(4, w.to_vec()));
            ControlFlow::Continue(())
        });
        assert_eq!(seen, span(&g));
        let mut partial = HashSet::new();
        let _ = gray_walk(&g, 3, 8, |w| {
            partial.insert(w[0]);
            ControlFlow::Continue(())
        });
        let _ = gray_walk(&g, 0, 3, |w| {
            partial.insert(w[0]);
            ControlFlow::Continue(())
        });
        assert_eq!(partial.len(), 8);
    }

    #[test]
    fn packed_bits_roundtrip() {
        let h = m(&["101", "011"]);
        let bytes = h.to_packed_bits();
        assert_eq!(bytes, vec![0b1010_1100]);
        assert_eq!(BinaryMatrix::from_packed_bits(2, 3, &bytes).unwrap(), h);
        assert!(BinaryMatrix::from_packed_bits(2, 3, &[0b1010_1101]).is_err());
    }
}
