//! Cyclic Jacobi eigendecomposition for dense symmetric matrices.

use super::SymMatrix;
use crate::error::{Error, Result};

/// Maximum number of full Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 30;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Count of eigenvalues above `tol · max(1, |λ|_max)` in magnitude.
    pub fn rank(&self, tol: f64) -> usize {
        let cut = tol * self.max_abs_eigenvalue().max(1.0);
        self.eigenvalues.iter().filter(|l| l.abs() > cut).count()
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let mut out = SymMatrix::zeros(n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let w = f(*lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let wi = w * v[i];
                for j in i..n {
                    out.add_at(i, j, wi * v[j]);
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|l| l)
    }
}

pub fn eigendecompose(m: &SymMatrix) -> Result<EigDecomposition> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::Validation("eigendecomposition of an empty matrix".into()));
    }
    let mut a = m.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.frobenius_norm();
    if scale == 0.0 || !scale.is_finite() {
        if !scale.is_finite() {
            return Err(Error::EigenNonConvergence { residual: f64::NAN });
        }
        return Ok(sorted(n, a, v));
    }

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let o = off(&a);
        if o == 0.0 || o <= 1e-300 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Negligible after a few sweeps: drop it outright.
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, n, p, q, c, s, t);
            }
        }
    }
    if !converged {
        let o = off(&a);
        if o > 1e-14 * scale {
            return Err(Error::EigenNonConvergence { residual: o });
        }
    }
    Ok(sorted(n, a, v))
}

#[allow(clippy::too_many_arguments)]
fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let apq = a[p * n + q];
    a[p * n + p] -= t * apq;
    a[q * n + q] += t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[r * n + p];
        let arq = a[r * n + q];
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a[r * n + p] = new_rp;
        a[p * n + r] = new_rp;
        a[r * n + q] = new_rq;
        a[q * n + r] = new_rq;
    }
    for r in 0..n {
        let vrp = v[r * n + p];
        let vrq = v[r * n + q];
        v[r * n + p] = c * vrp - s * vrq;
        v[r * n + q] = s * vrp + c * vrq;
    }
}

fn sorted(n: usize, a: Vec<f64>, v: Vec<f64>) -> EigDecomposition {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = order.iter().map(|&k| a[k * n + k]).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| (0..n).map(|r| v[r * n + k]).collect())
        .collect();
    EigDecomposition {
        eigenvalues,
        eigenvectors,
    }
}
