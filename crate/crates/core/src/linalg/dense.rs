//! General dense helpers: square products, Cholesky and LU solves.

use super::SymMatrix;

/// Row-major general square matrix used for intermediate products.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_sym(s: &SymMatrix) -> Self {
        Mat {
            n: s.dim(),
            data: s.as_slice().to_vec(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_sym(&self, other: &SymMatrix) -> Mat {
        self.mul(&Mat::from_sym(other))
    }

    /// `(A + Aᵀ)/2`.
    pub fn sym_part(&self) -> SymMatrix {
        let n = self.n;
        SymMatrix::from_fn(n, |i, j| 0.5 * (self.data[i * n + j] + self.data[j * n + i]))
    }

    /// `A • B` against a symmetric matrix.
    pub fn dot_sym(&self, other: &SymMatrix) -> f64 {
        self.data.iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }
}

/// Lower Cholesky factor of a row-major SPD matrix; `None` if not positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the lower factor.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// Solves `A x = b` by LU with partial pivoting. `None` when `A` is singular.
pub fn lu_solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col].abs() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
            x[r] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// Rank-revealing factorization `P A Pᵀ ≈ L Lᵀ` of a PSD matrix.
#[derive(Clone, Debug)]
pub struct PivotedCholesky {
    pub n: usize,
    pub rank: usize,
    /// Pivot order: `perm[k]` is the original index eliminated at step `k`.
    pub perm: Vec<usize>,
    /// `n × rank` lower factor in permuted order, row-major.
    pub l: Vec<f64>,
}

impl PivotedCholesky {
    /// Solves `A x = b` on the leading nonsingular part; indices beyond the
    /// numerical rank get `x = 0`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, r) = (self.n, self.rank);
        let pb: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        let mut y = vec![0.0; r];
        for i in 0..r {
            let mut s = pb[i];
            for k in 0..i {
                s -= self.l[i * r + k] * y[k];
            }
            y[i] = s / self.l[i * r + i];
        }
        let mut z = vec![0.0; r];
        for i in (0..r).rev() {
            let mut s = y[i];
            for k in (i + 1)..r {
                s -= self.l[k * r + i] * z[k];
            }
            z[i] = s / self.l[i * r + i];
        }
        let mut x = vec![0.0; n];
        for i in 0..r {
            x[self.perm[i]] = z[i];
        }
        x
    }
}

/// Diagonal-pivoted Cholesky. Stops when the largest remaining pivot falls
/// below `tol · max diagonal`.
pub fn pivoted_cholesky(a: &[f64], n: usize, tol: f64) -> PivotedCholesky {
    let mut w = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[i * n + i]));
    let cut = tol * max_diag.max(f64::MIN_POSITIVE);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| w[perm[i] * n + perm[i]].total_cmp(&w[perm[j] * n + perm[j]]))
            .unwrap();
        let d = w[perm[piv] * n + perm[piv]];
        if !(d > cut) {
            break;
        }
        perm.swap(k, piv);
        let p = perm[k];
        let s = d.sqrt();
        let mut col = vec![0.0; n];
        col[p] = s;
        for &q in &perm[(k + 1)..] {
            col[q] = w[q * n + p] / s;
        }
        for &i in &perm[(k + 1)..] {
            for &j in &perm[(k + 1)..] {
                w[i * n + j] -= col[i] * col[j];
            }
        }
        cols.push(col);
    }
    let rank = cols.len();
    let mut l = vec![0.0; n * rank];
    for (c, col) in cols.iter().enumerate() {
        for (row, &p) in perm.iter().enumerate() {
            l[row * rank + c] = col[p];
        }
    }
    PivotedCholesky { n, rank, perm, l }
}
