//! Infeasible-start primal-dual interior-point iteration (HKM direction,
//! Mehrotra predictor-corrector) on the cone `S₊ᴺ × ℝ₊ᵖ`.
//!
//! Primal: `min C•X + cᵀx  s.t.  Aₖ•X + aₖᵀx = bₖ,  X ⪰ 0, x ≥ 0`.
//! Dual:   `max bᵀy  s.t.  Z = C - Σ yₖAₖ ⪰ 0,  z = c - Σ yₖaₖ ≥ 0`.

use crate::linalg::{cholesky, cholesky_solve, eigendecompose, pivoted_cholesky, Mat, SymMatrix};

/// One equality row `A•X + Σ coeff·x[idx] = b`.
#[derive(Clone, Debug)]
pub(crate) struct ConicRow {
    pub a: SymMatrix,
    pub lp: Vec<(usize, f64)>,
    pub b: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct ConicProblem {
    pub n: usize,
    pub p: usize,
    pub c: SymMatrix,
    pub c_lp: Vec<f64>,
    pub rows: Vec<ConicRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum IpmExit {
    Converged,
    /// Primal objective ran off to -∞ with small primal residual.
    PrimalDiverged,
    /// Dual objective ran off to +∞ with small dual residual.
    DualDiverged,
    Stalled,
    MaxIter,
    Breakdown,
}

#[derive(Clone, Debug)]
pub(crate) struct ConicSolution {
    pub exit: IpmExit,
    pub x: SymMatrix,
    pub y: Vec<f64>,
    pub z: SymMatrix,
    pub pobj: f64,
    pub dobj: f64,
    pub iterations: usize,
}

const STEP_FRACTION: f64 = 0.98;

struct Residuals {
    rp: Vec<f64>,
    rd: SymMatrix,
    rdl: Vec<f64>,
    pobj: f64,
    dobj: f64,
    relp: f64,
    reld: f64,
    gap: f64,
    mu: f64,
}

impl ConicProblem {
    fn apply(&self, x: &SymMatrix, xl: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.a.dot(x) + r.lp.iter().map(|&(i, c)| c * xl[i]).sum::<f64>())
            .collect()
    }

    fn adjoint(&self, y: &[f64]) -> (SymMatrix, Vec<f64>) {
        let mut m = SymMatrix::zeros(self.n);
        let mut v = vec![0.0; self.p];
        for (r, &yk) in self.rows.iter().zip(y) {
            if yk == 0.0 {
                continue;
            }
            m.axpy(yk, &r.a);
            for &(i, c) in &r.lp {
                v[i] += yk * c;
            }
        }
        (m, v)
    }

    pub fn scale(&self) -> f64 {
        let b = self.rows.iter().fold(0.0f64, |m, r| m.max(r.b.abs()));
        let a = self.rows.iter().fold(0.0f64, |m, r| {
            let lp: f64 = r.lp.iter().map(|(_, c)| c * c).sum();
            m.max((r.a.dot(&r.a) + lp).sqrt())
        });
        let c = (self.c.dot(&self.c) + crate::linalg::dot(&self.c_lp, &self.c_lp)).sqrt();
        b.max(a).max(c)
    }

    fn residuals(&self, x: &SymMatrix, xl: &[f64], y: &[f64], z: &SymMatrix, zl: &[f64]) -> Residuals {
        let ax = self.apply(x, xl);
        let rp: Vec<f64> = self.rows.iter().zip(&ax).map(|(r, v)| r.b - v).collect();
        let (aty, atyl) = self.adjoint(y);
        let rd = self.c.sub(&aty).sub(z);
        let rdl: Vec<f64> = (0..self.p).map(|i| self.c_lp[i] - atyl[i] - zl[i]).collect();
        let pobj = self.c.dot(x) + crate::linalg::dot(&self.c_lp, xl);
        let dobj: f64 = self.rows.iter().zip(y).map(|(r, yk)| r.b * yk).sum();
        let bnorm = self.rows.iter().map(|r| r.b * r.b).sum::<f64>().sqrt();
        let cnorm = (self.c.dot(&self.c) + crate::linalg::dot(&self.c_lp, &self.c_lp)).sqrt();
        let relp = crate::linalg::norm2(&rp) / (1.0 + bnorm);
        let reld = (rd.dot(&rd) + crate::linalg::dot(&rdl, &rdl)).sqrt() / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let nu = (self.n + self.p).max(1) as f64;
        let mu = (x.dot(z) + crate::linalg::dot(xl, zl)) / nu;
        Residuals {
            rp,
            rd,
            rdl,
            pobj,
            dobj,
            relp,
            reld,
            gap,
            mu,
        }
    }
}

/// Inverse of an SPD matrix through its Cholesky factor.
fn spd_inverse(m: &SymMatrix) -> Option<SymMatrix> {
    let n = m.dim();
    let l = cholesky(m.as_slice(), n)?;
    let mut inv = SymMatrix::zeros(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = cholesky_solve(&l, n, &e);
        for i in j..n {
            inv.set(i, j, col[i]);
        }
    }
    Some(inv)
}

/// Largest `α` with `X + α ΔX ⪰ 0` (∞ when the direction never leaves the cone).
fn max_step_psd(x: &SymMatrix, dx: &SymMatrix) -> f64 {
    let n = x.dim();
    if n == 0 {
        return f64::INFINITY;
    }
    let Some(l) = cholesky(x.as_slice(), n) else {
        return 0.0;
    };
    // W = L⁻¹ ΔX L⁻ᵀ
    let mut t = vec![0.0; n * n];
    for col in 0..n {
        for i in 0..n {
            let mut s = dx.get(i, col);
            for k in 0..i {
                s -= l[i * n + k] * t[k * n + col];
            }
            t[i * n + col] = s / l[i * n + i];
        }
    }
    let mut w = vec![0.0; n * n];
    for row in 0..n {
        for i in 0..n {
            let mut s = t[row * n + i];
            for k in 0..i {
                s -= l[i * n + k] * w[row * n + k];
            }
            w[row * n + i] = s / l[i * n + i];
        }
    }
    let Ok(wm) = SymMatrix::from_row_major(n, &w) else {
        return 0.0;
    };
    match eigendecompose(&wm) {
        Ok(e) => {
            let lo = e.eigenvalues[0];
            if lo >= 0.0 {
                f64::INFINITY
            } else {
                -1.0 / lo
            }
        }
        Err(_) => 0.0,
    }
}

fn max_step_lp(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

enum SchurFactor {
    Dense(Vec<f64>),
    Pivoted(crate::linalg::PivotedCholesky),
}

impl SchurFactor {
    fn solve(&self, k: usize, rhs: &[f64]) -> Vec<f64> {
        match self {
            SchurFactor::Dense(l) => cholesky_solve(l, k, rhs),
            SchurFactor::Pivoted(f) => f.solve(rhs),
        }
    }
}

struct Direction {
    dx: SymMatrix,
    dxl: Vec<f64>,
    dz: SymMatrix,
    dzl: Vec<f64>,
}

pub(crate) fn solve_conic(prob: &ConicProblem, tol: f64, max_iter: usize) -> ConicSolution {
    let (n, p, k) = (prob.n, prob.p, prob.rows.len());
    let tau = 1.0 + prob.scale();
    let mut x = SymMatrix::identity(n).scaled(tau);
    let mut xl = vec![tau; p];
    let mut y = vec![0.0; k];
    let mut z = SymMatrix::identity(n).scaled(tau);
    let mut zl = vec![tau; p];
    let diverge_at = 1.0 / tol;

    let mut stalls = 0usize;
    let mut exit = IpmExit::MaxIter;
    let mut iterations = 0usize;
    let mut last = prob.residuals(&x, &xl, &y, &z, &zl);

    for iter in 0..max_iter {
        iterations = iter;
        let res = prob.residuals(&x, &xl, &y, &z, &zl);
        last = res;
        let res = &last;
        if res.relp <= tol && res.reld <= tol && res.gap <= tol {
            exit = IpmExit::Converged;
            break;
        }
        if res.relp <= tol.sqrt() && res.pobj < -diverge_at {
            exit = IpmExit::PrimalDiverged;
            break;
        }
        if res.reld <= tol.sqrt() && res.dobj > diverge_at {
            exit = IpmExit::DualDiverged;
            break;
        }
        if !res.pobj.is_finite() || !res.dobj.is_finite() {
            exit = IpmExit::Breakdown;
            break;
        }

        let Some(zinv) = spd_inverse(&z) else {
            exit = IpmExit::Breakdown;
            break;
        };
        let xm = Mat::from_sym(&x);
        let zinv_m = Mat::from_sym(&zinv);
        let d: Vec<f64> = xl.iter().zip(&zl).map(|(a, b)| a / b).collect();

        // Schur complement M_ij = A_i • (X A_j Z⁻¹) + a_iᵀ D a_j.
        let t: Vec<Mat> = prob.rows.iter().map(|r| xm.mul_sym(&r.a).mul(&zinv_m)).collect();
        let mut schur = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let mut v = t[j].dot_sym(&prob.rows[i].a);
                for &(ii, ci) in &prob.rows[i].lp {
                    for &(jj, cj) in &prob.rows[j].lp {
                        if ii == jj {
                            v += ci * cj * d[ii];
                        }
                    }
                }
                schur[i * k + j] = v;
                schur[j * k + i] = v;
            }
        }
        let factor = match cholesky(&schur, k) {
            Some(l) => SchurFactor::Dense(l),
            None => {
                let f = pivoted_cholesky(&schur, k, 1e-13);
                if f.rank == 0 {
                    exit = IpmExit::Breakdown;
                    break;
                }
                SchurFactor::Pivoted(f)
            }
        };

        // X Rd Z⁻¹ enters every right-hand side.
        let x_rd_zinv = xm.mul_sym(&res.rd).mul(&zinv_m);

        let direction_with_dy = |rc: &SymMatrix, rcl: &[f64]| -> (Direction, Vec<f64>) {
            let rhs: Vec<f64> = (0..k)
                .map(|i| {
                    let row = &prob.rows[i];
                    let mut v = res.rp[i] - row.a.dot(rc) + x_rd_zinv.dot_sym(&row.a);
                    for &(ii, ci) in &row.lp {
                        v -= ci * (rcl[ii] - d[ii] * res.rdl[ii]);
                    }
                    v
                })
                .collect();
            let dy = factor.solve(k, &rhs);
            let (aty, atyl) = prob.adjoint(&dy);
            let dz = res.rd.sub(&aty);
            let dzl: Vec<f64> = (0..p).map(|i| res.rdl[i] - atyl[i]).collect();
            let dx = rc.sub(&xm.mul_sym(&dz).mul(&zinv_m).sym_part());
            let dxl: Vec<f64> = (0..p).map(|i| rcl[i] - d[i] * dzl[i]).collect();
            (Direction { dx, dxl, dz, dzl }, dy)
        };

        // Predictor.
        let rc_aff = x.scaled(-1.0);
        let rcl_aff: Vec<f64> = xl.iter().map(|v| -v).collect();
        let (aff, _) = direction_with_dy(&rc_aff, &rcl_aff);
        let ap_aff = 1.0f64.min(max_step_psd(&x, &aff.dx)).min(max_step_lp(&xl, &aff.dxl));
        let ad_aff = 1.0f64.min(max_step_psd(&z, &aff.dz)).min(max_step_lp(&zl, &aff.dzl));
        let mut xa = x.clone();
        xa.axpy(ap_aff, &aff.dx);
        let mut za = z.clone();
        za.axpy(ad_aff, &aff.dz);
        let lp_aff: f64 = (0..p)
            .map(|i| (xl[i] + ap_aff * aff.dxl[i]) * (zl[i] + ad_aff * aff.dzl[i]))
            .sum();
        let nu = (n + p).max(1) as f64;
        let mu_aff = (xa.dot(&za) + lp_aff) / nu;
        let sigma = if res.mu > 0.0 {
            (mu_aff / res.mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // Corrector.
        let smu = sigma * res.mu;
        let mut rc = zinv.scaled(smu);
        rc.axpy(-1.0, &x);
        let second = Mat::from_sym(&aff.dx).mul_sym(&aff.dz).mul(&zinv_m).sym_part();
        rc.axpy(-1.0, &second);
        let rcl: Vec<f64> = (0..p)
            .map(|i| smu / zl[i] - xl[i] - aff.dxl[i] * aff.dzl[i] / zl[i])
            .collect();
        let (dir, dy) = direction_with_dy(&rc, &rcl);

        let ap = 1.0f64.min(
            STEP_FRACTION * max_step_psd(&x, &dir.dx).min(max_step_lp(&xl, &dir.dxl)),
        );
        let ad = 1.0f64.min(
            STEP_FRACTION * max_step_psd(&z, &dir.dz).min(max_step_lp(&zl, &dir.dzl)),
        );
        if !(ap.is_finite() && ad.is_finite()) {
            exit = IpmExit::Breakdown;
            break;
        }
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                exit = IpmExit::Stalled;
                break;
            }
        } else {
            stalls = 0;
        }
        x.axpy(ap, &dir.dx);
        for i in 0..p {
            xl[i] += ap * dir.dxl[i];
        }
        z.axpy(ad, &dir.dz);
        for i in 0..p {
            zl[i] += ad * dir.dzl[i];
        }
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
        iterations = iter + 1;
    }
    if exit == IpmExit::MaxIter {
        last = prob.residuals(&x, &xl, &y, &z, &zl);
        if last.relp <= tol && last.reld <= tol && last.gap <= tol {
            exit = IpmExit::Converged;
        }
    }
    ConicSolution {
        exit,
        x,
        y,
        z,
        pobj: last.pobj,
        dobj: last.dobj,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(a: SymMatrix, b: f64) -> ConicRow {
        ConicRow { a, lp: vec![], b }
    }

    #[test]
    fn trace_pinned() {
        let prob = ConicProblem {
            n: 2,
            p: 0,
            c: SymMatrix::identity(2),
            c_lp: vec![],
            rows: vec![row(SymMatrix::identity(2), 1.0)],
        };
        let s = solve_conic(&prob, 1e-9, 100);
        assert_eq!(s.exit, IpmExit::Converged);
        assert!((s.pobj - 1.0).abs() < 1e-7);
    }

    #[test]
    fn lp_only_block() {
        // min x0 + 2 x1 s.t. x0 + x1 = 1 over a trivial 1x1 psd block
        let prob = ConicProblem {
            n: 1,
            p: 2,
            c: SymMatrix::zeros(1),
            c_lp: vec![1.0, 2.0],
            rows: vec![ConicRow {
                a: SymMatrix::zeros(1),
                lp: vec![(0, 1.0), (1, 1.0)],
                b: 1.0,
            }],
        };
        let s = solve_conic(&prob, 1e-9, 100);
        assert_eq!(s.exit, IpmExit::Converged);
        assert!((s.pobj - 1.0).abs() < 1e-7, "{}", s.pobj);
    }

    #[test]
    fn max_step_examples() {
        let x = SymMatrix::identity(2);
        let dx = SymMatrix::from_diag(&[-2.0, 1.0]);
        assert!((max_step_psd(&x, &dx) - 0.5).abs() < 1e-14);
        assert_eq!(max_step_psd(&x, &SymMatrix::identity(2)), f64::INFINITY);
        assert_eq!(max_step_lp(&[1.0, 2.0], &[-4.0, 1.0]), 0.25);
    }
}
