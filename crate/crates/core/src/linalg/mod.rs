//! Dense symmetric linear algebra.
//!
//! Everything in this crate works with small dense matrices (dimension well
//! under a hundred), so storage is a plain row-major `Vec<f64>` and the
//! algorithms favour robustness over asymptotic speed.

mod dense;
mod eigen;

pub use dense::{cholesky, cholesky_solve, lu_solve, pivoted_cholesky, Mat, PivotedCholesky};
pub use eigen::{eigendecompose, EigDecomposition, MAX_SWEEPS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

/// Dense symmetric matrix. Entries `(i, j)` and `(j, i)` are always equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from a full row-major buffer, replacing it by `(M + Mᵀ)/2`.
    pub fn from_row_major(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self::from_fn(dim, |i, j| {
            0.5 * (data[i * dim + j] + data[j * dim + i])
        }))
    }

    /// Builds from nested rows, symmetrizing. Fails on ragged or non-square input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut flat = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_major(dim, &flat)
    }

    /// `v vᵀ`.
    pub fn rank_one(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    /// Largest `|M_ij - M_ji|` of a nested-row matrix before symmetrization.
    pub fn asymmetry(rows: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if let Some(w) = rows.get(j).and_then(|r| r.get(i)) {
                    worst = worst.max((v - w).abs());
                }
            }
        }
        worst
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Adds `v` to entry `(i, j)` and its mirror (once on the diagonal).
    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    /// Row-major view of the full matrix.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product `A • B`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SymMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        self.data
            .chunks(self.dim.max(1))
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.mul_vec(x)).map(|(a, b)| a * b).sum()
    }

    /// `xᵀ M y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul_vec(y)).map(|(a, b)| a * b).sum()
    }

    /// Places `self` at offset `(at, at)` inside a zero matrix of size `dim`.
    pub fn embed(&self, dim: usize, at: usize) -> SymMatrix {
        assert!(at + self.dim <= dim);
        let mut out = SymMatrix::zeros(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[(at + i) * dim + at + j] = self.get(i, j);
            }
        }
        out
    }

    /// Principal submatrix on rows/cols `start..start+len`.
    pub fn block(&self, start: usize, len: usize) -> SymMatrix {
        SymMatrix::from_fn(len, |i, j| self.get(start + i, start + j))
    }

    /// `Vᵀ M V` for `V` with `cols` columns stored row-major (`dim × cols`).
    pub fn congruence(&self, v: &[f64], cols: usize) -> SymMatrix {
        let n = self.dim;
        debug_assert_eq!(v.len(), n * cols);
        let mut mv = vec![0.0; n * cols];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..cols {
                    mv[i * cols + c] += a * v[k * cols + c];
                }
            }
        }
        SymMatrix::from_fn(cols, |a, b| (0..n).map(|i| v[i * cols + a] * mv[i * cols + b]).sum())
    }

    /// `V M Vᵀ` for `V` stored row-major (`rows × dim`).
    pub fn expand(&self, v: &[f64], rows: usize) -> SymMatrix {
        let r = self.dim;
        debug_assert_eq!(v.len(), rows * r);
        let mut vm = vec![0.0; rows * r];
        for i in 0..rows {
            for k in 0..r {
                let a = v[i * r + k];
                if a == 0.0 {
                    continue;
                }
                for c in 0..r {
                    vm[i * r + c] += a * self.get(k, c);
                }
            }
        }
        SymMatrix::from_fn(rows, |a, b| (0..r).map(|k| vm[a * r + k] * v[b * r + k]).sum())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// Smallest eigenvalue of `m`.
pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    if m.dim() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(eigendecompose(m)?.eigenvalues[0])
}

/// Largest eigenvalue of `m`.
pub fn max_eigenvalue(m: &SymMatrix) -> Result<f64> {
    if m.dim() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(*eigendecompose(m)?.eigenvalues.last().unwrap())
}

/// True iff `λ_min(m) ≥ -tol (1 + ‖m‖_F)`.
pub fn psd_cone_projection_check(m: &SymMatrix, tol: f64) -> bool {
    match min_eigenvalue(m) {
        Ok(l) => l >= -tol * (1.0 + m.frobenius_norm()),
        Err(_) => false,
    }
}

/// Number of eigenvalues with `|λ| > tol · max(1, |λ|_max)`.
pub fn numerical_rank(m: &SymMatrix, tol: f64) -> Result<usize> {
    if m.dim() == 0 {
        return Ok(0);
    }
    let eig = eigendecompose(m)?;
    Ok(eig.rank(tol))
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
