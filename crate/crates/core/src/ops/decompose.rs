//! Finite atomic measures representing a quadratic moment triple.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, eigendecompose, psd_cone_projection_check, SymMatrix};
use crate::quadratic::{ConstraintKind, QuadraticConstraint};

use super::rank::{factor_product, pataki_factor, psd_factor};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `Σ λⱼ (1, uⱼ)(1, uⱼ)ᵀ` for atoms in `ℝⁿ`.
    pub fn moment_matrix(&self, n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n + 1);
        for (u, &w) in self.atoms.iter().zip(&self.weights) {
            let mut v = vec![1.0];
            v.extend_from_slice(u);
            m.axpy(w, &SymMatrix::rank_one(&v));
        }
        m
    }
}

/// `[[t, zᵀ], [z, Z]]`.
pub fn moment_matrix(t: f64, z: &[f64], big_z: &SymMatrix) -> Result<SymMatrix> {
    let n = z.len();
    if big_z.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: big_z.dim(),
        });
    }
    Ok(SymMatrix::from_fn(n + 1, |i, j| match (i, j) {
        (0, 0) => t,
        (0, j) => z[j - 1],
        (i, j) => big_z.get(i - 1, j - 1),
    }))
}

/// Writes the triple `(t, z, Z)` as `Σ λⱼ (1, uⱼ, uⱼuⱼᵀ)` with every `uⱼ`
/// satisfying the constraint.
///
/// Each step restricts to the face of the residual moment matrix, finds a
/// rank-one point of that face with the same mass and localizing value, and
/// subtracts the largest multiple that keeps the residual PSD. The residual
/// rank drops by one per atom. A residual with mass that sits at infinity
/// (vanishing corner) cannot be peeled and ends in [`Error::Decomposition`].
pub fn decompose_moment(
    t: f64,
    z: &[f64],
    big_z: &SymMatrix,
    constraint: &QuadraticConstraint,
) -> Result<AtomicMeasure> {
    let n = z.len();
    if constraint.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: constraint.dim(),
        });
    }
    let m = moment_matrix(t, z, big_z)?;
    let scale = 1.0 + m.frobenius_norm();
    if !psd_cone_projection_check(&m, 1e-8) {
        return Err(Error::validation("moment matrix is not positive semidefinite"));
    }
    let g = constraint.q.gram().matrix;
    let loc = g.dot(&m);
    let loc_tol = 1e-8 * scale * (1.0 + g.frobenius_norm());
    let ok = match constraint.kind {
        ConstraintKind::Inequality => loc >= -loc_tol,
        ConstraintKind::Equality => loc.abs() <= loc_tol,
    };
    if !ok {
        return Err(Error::validation(format!("localizing value {loc:e} violates the constraint")));
    }

    let dim = n + 1;
    let mut corner = SymMatrix::zeros(dim);
    corner.set(0, 0, 1.0);
    let (mut v, mut r) = psd_factor(&m, 1e-12)?;
    let cap = r + 1;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    let stop = 1e-7 * scale;

    while r > 0 {
        let residual = factor_product(&v, dim, r);
        if residual.frobenius_norm() <= stop {
            break;
        }
        let mass = residual.get(0, 0);
        if atoms.len() >= cap || mass <= 1e-10 * scale {
            return Err(Error::Decomposition {
                residual: residual.frobenius_norm(),
                atoms: atoms.len(),
                remainder: residual.to_rows(),
            });
        }
        // rank-one point p of the face with the same corner and localizing value
        let (p, pr) = pataki_factor(v.clone(), dim, r, &[&corner, &g], None)?;
        if pr != 1 {
            return Err(Error::NumericalTrouble(format!("face reduction ended at rank {pr}")));
        }
        // s solves V s = p
        let vtv = SymMatrix::identity(dim).congruence(&v, r);
        let vtp: Vec<f64> = (0..r).map(|a| (0..dim).map(|i| v[i * r + a] * p[i]).sum()).collect();
        let l = cholesky(vtv.as_slice(), r)
            .ok_or_else(|| Error::NumericalTrouble("face factor lost full column rank".into()))?;
        let s = cholesky_solve(&l, r, &vtp);
        let ss: f64 = s.iter().map(|c| c * c).sum();
        let lambda = (1.0 / ss).min(1.0);
        let p0 = p[0];
        let u: Vec<f64> = p[1..].iter().map(|c| c / p0).collect();
        atoms.push(u);
        weights.push(lambda * p0 * p0);

        // remaining factor: V restricted to the complement of s
        let shat: Vec<f64> = s.iter().map(|c| c / ss.sqrt()).collect();
        let proj = SymMatrix::identity(r).sub(&SymMatrix::rank_one(&shat));
        let e = eigendecompose(&proj)?;
        let keep: Vec<usize> = (0..r).filter(|&k| e.eigenvalues[k] > 0.5).collect();
        // V(I - λ s sᵀ)Vᵀ; with λ = 1/‖s‖² only the complement survives,
        // otherwise the s direction keeps weight 1 - λ‖s‖².
        let mut cols: Vec<Vec<f64>> = keep
            .iter()
            .map(|&k| (0..dim).map(|i| (0..r).map(|a| v[i * r + a] * e.eigenvectors[k][a]).sum()).collect())
            .collect();
        let rest = 1.0 - lambda * ss;
        if rest > 1e-12 {
            let c = rest.sqrt();
            cols.push((0..dim).map(|i| c * (0..r).map(|a| v[i * r + a] * shat[a]).sum::<f64>()).collect());
        }
        r = cols.len();
        v = vec![0.0; dim * r];
        for (c, col) in cols.iter().enumerate() {
            for i in 0..dim {
                v[i * r + c] = col[i];
            }
        }
    }

    let measure = AtomicMeasure { atoms, weights };
    let err = measure.moment_matrix(n).sub(&m).frobenius_norm();
    if err > 1e-6 * (1.0 + big_z.frobenius_norm()) {
        return Err(Error::Decomposition {
            residual: err,
            atoms: measure.len(),
            remainder: m.sub(&measure.moment_matrix(n)).to_rows(),
        });
    }
    Ok(measure)
}
