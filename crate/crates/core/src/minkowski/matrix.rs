use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Square dense matrix, row-major. Row index is the upper (contravariant)
/// index, column index the lower one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct Matrix {
    dim: usize,
    data: SmallVec<[f64; 16]>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: smallvec::smallvec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Malformed("empty matrix".into()));
        }
        let mut data = SmallVec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for &x in row {
                if !x.is_finite() {
                    return Err(Error::NonFinite);
                }
                data.push(x);
            }
        }
        Ok(Self { dim, data })
    }

    pub(crate) fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = SmallVec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn add_scaled(&mut self, other: &Matrix, s: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Matrix) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += self.data[i * d + j] * other.data[j * d + i];
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// η·M: lowers the row index.
    pub fn eta_left(&self) -> Matrix {
        let mut out = self.clone();
        for j in 0..self.dim {
            out.data[j] = -out.data[j];
        }
        out
    }

    /// M·η
    pub fn eta_right(&self) -> Matrix {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim] = -out.data[i * self.dim];
        }
        out
    }

    /// Numerical rank by gaussian elimination with full pivoting.
    pub fn rank(&self, tol: f64) -> usize {
        let d = self.dim;
        let mut a: Vec<f64> = self.data.to_vec();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut rank = 0;
        let mut rows: Vec<usize> = (0..d).collect();
        let mut cols: Vec<usize> = (0..d).collect();
        while rank < d {
            let mut best = (0.0, 0, 0);
            for (ri, &r) in rows.iter().enumerate().skip(rank) {
                for (ci, &c) in cols.iter().enumerate().skip(rank) {
                    let v = a[r * d + c].abs();
                    if v > best.0 {
                        best = (v, ri, ci);
                    }
                }
            }
            if best.0 <= tol * scale {
                break;
            }
            rows.swap(rank, best.1);
            cols.swap(rank, best.2);
            let (pr, pc) = (rows[rank], cols[rank]);
            let pivot = a[pr * d + pc];
            for &r in rows.iter().skip(rank + 1) {
                let f = a[r * d + pc] / pivot;
                for &c in cols.iter().skip(rank) {
                    a[r * d + c] -= f * a[pr * d + c];
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}
