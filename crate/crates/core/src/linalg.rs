//! Small dense real linear algebra: column-major matrices, a cyclic Jacobi
//! symmetric eigensolver, Cholesky solves and symmetric pseudo-inverses.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    /// Builds from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, values[i * cols + j]);
            }
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (yi, a) in y.iter_mut().zip(self.column(j)) {
                    *yi += a * xj;
                }
            }
        }
        Ok(y)
    }

    /// `selfᵀ y`.
    pub fn t_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                found: y.len(),
            });
        }
        Ok((0..self.cols).map(|j| dot(self.column(j), y)).collect())
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let v = dot(self.column(i), self.column(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Principal submatrix on `indices` (rows and columns).
    pub fn principal_submatrix(&self, indices: &[usize]) -> DenseMatrix {
        let n = indices.len();
        let mut out = DenseMatrix::zeros(n, n);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }

    pub fn select_columns(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for &j in indices {
            data.extend_from_slice(self.column(j));
        }
        DenseMatrix {
            rows: self.rows,
            cols: indices.len(),
            data,
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector of `values[i]`, when requested.
    pub vectors: Option<DenseMatrix>,
    pub sweeps: usize,
}

/// Off-diagonal Frobenius norm at which Jacobi iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi iteration on a symmetric matrix. Stops once the off-diagonal
/// Frobenius norm falls to `1e-12 · max(1, ‖A‖_F)`.
pub fn symmetric_eigen(a: &DenseMatrix, want_vectors: bool) -> SymmetricEigen {
    assert_eq!(a.rows, a.cols, "eigen-decomposition needs a square matrix");
    let n = a.rows;
    // Row-major working copy; symmetric so layout only matters for locality.
    let mut w: Vec<f64> = a.data.clone();
    let mut v = if want_vectors {
        Some(DenseMatrix::identity(n))
    } else {
        None
    };
    let frob = norm2(&w);
    let tol = JACOBI_TOLERANCE * frob.max(1.0);
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += w[i * n + j] * w[i * n + j];
                }
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[q * n + q] - w[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w[k * n + p];
                    let akq = w[k * n + q];
                    w[k * n + p] = c * akp - s * akq;
                    w[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[p * n + k];
                    let aqk = w[q * n + k];
                    w[p * n + k] = c * apk - s * aqk;
                    w[q * n + k] = s * apk + c * aqk;
                }
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| w[x * n + x].total_cmp(&w[y * n + y]));
    let values = order.iter().map(|&i| w[i * n + i]).collect();
    let vectors = v.map(|v| v.select_columns(&order));
    SymmetricEigen {
        values,
        vectors,
        sweeps,
    }
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix.
pub fn eigen_extremes(a: &DenseMatrix) -> (f64, f64) {
    match a.rows {
        0 => (0.0, 0.0),
        1 => (a.get(0, 0), a.get(0, 0)),
        2 => {
            let (x, y, z) = (a.get(0, 0), a.get(1, 1), a.get(0, 1));
            let mean = 0.5 * (x + y);
            let r = (0.25 * (x - y) * (x - y) + z * z).sqrt();
            (mean - r, mean + r)
        }
        _ => {
            let e = symmetric_eigen(a, false);
            (e.values[0], *e.values.last().expect("nonempty"))
        }
    }
}

/// Lower-triangular Cholesky factor, or `None` if the matrix is not
/// numerically positive definite.
pub fn cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows;
    let scale = (0..n)
        .map(|i| a.get(i, i).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= 1e-12 * scale {
            return None;
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    y
}

/// Moore-Penrose pseudo-inverse of a symmetric positive semidefinite matrix.
/// Eigenvalues below `rel_tol · λ_max` are treated as zero.
pub fn symmetric_pinv(a: &DenseMatrix, rel_tol: f64) -> DenseMatrix {
    let n = a.rows;
    let e = symmetric_eigen(a, true);
    let v = e.vectors.expect("vectors requested");
    let lmax = e.values.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &lambda) in e.values.iter().enumerate() {
        if lambda <= rel_tol * lmax || lambda <= 0.0 {
            continue;
        }
        let inv = 1.0 / lambda;
        let col = v.column(k);
        for j in 0..n {
            let cj = col[j] * inv;
            for i in 0..n {
                out.data[j * n + i] += col[i] * cj;
            }
        }
    }
    out
}
