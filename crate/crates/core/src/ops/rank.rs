//! Rank reduction on the optimal face and rank-one atom extraction.

use crate::error::{Error, Result};
use crate::linalg::{eigendecompose, norm2, numerical_rank, SymMatrix, DEFAULT_RANK_TOL};
use crate::repr::{embed_equality_form, embed_point, ShadowShape, SpectrahedralShadow};
use crate::sdp::{Direction, SdpProblem, SdpSolution, SdpStatus, Sense};

/// `X ≈ V Vᵀ` keeping eigenvalues above `cut · max(1, λ_max)`.
/// Returns `V` row-major (`dim × r`) and `r`.
pub(crate) fn psd_factor(x: &SymMatrix, cut: f64) -> Result<(Vec<f64>, usize)> {
    let n = x.dim();
    let e = eigendecompose(x)?;
    let top = e.eigenvalues.last().copied().unwrap_or(0.0).max(1.0);
    let keep: Vec<usize> = (0..n).filter(|&k| e.eigenvalues[k] > cut * top).collect();
    let r = keep.len();
    let mut v = vec![0.0; n * r];
    for (c, &k) in keep.iter().enumerate() {
        let s = e.eigenvalues[k].sqrt();
        for i in 0..n {
            v[i * r + c] = s * e.eigenvectors[k][i];
        }
    }
    Ok((v, r))
}

pub(crate) fn factor_product(v: &[f64], rows: usize, r: usize) -> SymMatrix {
    SymMatrix::identity(r).expand(v, rows)
}

/// A unit vector orthogonal to every row of `g` (`k × d`), or `None` when
/// the rows span everything.
fn null_vector(g: &[Vec<f64>], d: usize) -> Option<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in g {
        let mut w = row.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = crate::linalg::dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nrm = norm2(&w);
        if nrm > 1e-12 * (1.0 + norm2(row)) {
            basis.push(w.into_iter().map(|v| v / nrm).collect());
        }
    }
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for j in 0..d {
        let mut w = vec![0.0; d];
        w[j] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = crate::linalg::dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nrm = norm2(&w);
        if nrm > best_norm {
            best_norm = nrm;
            best = Some(w);
        }
    }
    if best_norm < 1e-8 {
        return None;
    }
    best.map(|w| w.into_iter().map(|v| v / best_norm).collect())
}

/// Moves `VVᵀ` along null-space directions of the constraint map restricted
/// to its face until `r(r+1)/2 ≤ k`. With an objective, each step is taken in
/// the direction that does not worsen `sign · C • X`.
pub(crate) fn pataki_factor(
    mut v: Vec<f64>,
    rows: usize,
    mut r: usize,
    constraints: &[&SymMatrix],
    objective: Option<(&SymMatrix, f64)>,
) -> Result<(Vec<f64>, usize)> {
    let k = constraints.len();
    let mut guard = 0;
    while r > 1 && r * (r + 1) / 2 > k {
        guard += 1;
        if guard > rows + 2 {
            return Err(Error::NumericalTrouble(format!(
                "rank reduction stalled at rank {r} with {k} constraints"
            )));
        }
        let pairs: Vec<(usize, usize)> = (0..r).flat_map(|a| (a..r).map(move |b| (a, b))).collect();
        let g: Vec<Vec<f64>> = constraints
            .iter()
            .map(|a| {
                let m = a.congruence(&v, r);
                pairs
                    .iter()
                    .map(|&(i, j)| if i == j { m.get(i, i) } else { 2.0 * m.get(i, j) })
                    .collect()
            })
            .collect();
        let Some(w) = null_vector(&g, pairs.len()) else {
            return Err(Error::NumericalTrouble(format!("no null-space move at rank {r}")));
        };
        let mut wm = SymMatrix::zeros(r);
        for (&(i, j), &val) in pairs.iter().zip(&w) {
            wm.set(i, j, val);
        }
        let e = eigendecompose(&wm)?;
        let lo = e.eigenvalues[0];
        let hi = e.eigenvalues[r - 1];
        let mut steps = Vec::new();
        if hi > 0.0 {
            steps.push(-1.0 / hi);
        }
        if lo < 0.0 {
            steps.push(-1.0 / lo);
        }
        let slope = objective.map(|(c, s)| s * c.congruence(&v, r).dot(&wm)).unwrap_or(0.0);
        steps.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        let t = steps
            .iter()
            .copied()
            .find(|t| t * slope <= 1e-12)
            .unwrap_or(steps[0]);
        let mut step = SymMatrix::identity(r);
        step.axpy(t, &wm);
        let es = eigendecompose(&step)?;
        let top = es.eigenvalues[r - 1].max(1.0);
        let keep: Vec<usize> = (0..r).filter(|&c| es.eigenvalues[c] > 1e-10 * top).collect();
        let r2 = keep.len();
        let mut v2 = vec![0.0; rows * r2];
        for (c, &kk) in keep.iter().enumerate() {
            let s = es.eigenvalues[kk].sqrt();
            for i in 0..rows {
                let mut acc = 0.0;
                for a in 0..r {
                    acc += v[i * r + a] * es.eigenvectors[kk][a];
                }
                v2[i * r2 + c] = s * acc;
            }
        }
        v = v2;
        r = r2;
    }
    Ok((v, r))
}

/// Moves an optimal solution of an equality-form problem to a vertex of the
/// optimal face with rank `r`, `r(r+1)/2 ≤ k`.
pub fn reduce_rank(p: &SdpProblem, sol: &SdpSolution) -> Result<SdpSolution> {
    if sol.status != SdpStatus::Optimal {
        return Err(Error::validation("reduce_rank needs an optimal solution"));
    }
    if p.constraints().iter().any(|c| c.sense != Sense::Eq) {
        return Err(Error::validation(
            "reduce_rank needs an equality-form problem; embed inequalities first",
        ));
    }
    let n = p.cone_dim();
    let k = p.constraints().len();
    let (v, r) = psd_factor(&sol.x, 1e-10)?;
    let rows: Vec<&SymMatrix> = p.constraints().iter().map(|c| &c.a).collect();
    let sign = match p.direction() {
        Direction::Min => 1.0,
        Direction::Max => -1.0,
    };
    let (v, r) = pataki_factor(v, n, r, &rows, Some((p.objective(), sign)))?;
    let x = factor_product(&v, n, r);
    let rank = numerical_rank(&x, DEFAULT_RANK_TOL)?;
    if rank * (rank + 1) / 2 > k {
        return Err(Error::NumericalTrouble(format!(
            "rank reduction ended at rank {rank}, above the bound for {k} constraints"
        )));
    }
    let mut out = sol.clone();
    out.primal_obj = p.objective().dot(&x);
    out.x = x;
    Ok(out)
}

/// Parameter-space atom of a rank-one lifted matrix.
///
/// Moment shapes are scaled so the corner is 1 and return `x`; Gram shapes
/// return the factor with its first nonzero coordinate positive, or zero
/// for a vanishing matrix.
pub fn extract_atom(y: &SymMatrix, shape: ShadowShape) -> Result<Vec<f64>> {
    let rank = numerical_rank(y, DEFAULT_RANK_TOL)?;
    // X = 0 is the Gram lift of x = 0; a moment matrix never vanishes
    if rank == 0 && !matches!(shape, ShadowShape::Moment { .. }) && y.max_abs() <= DEFAULT_RANK_TOL {
        return Ok(vec![0.0; y.dim()]);
    }
    if rank != 1 {
        return Err(Error::NotRankOne { rank });
    }
    let e = eigendecompose(y)?;
    let top = e.dim() - 1;
    let s = e.eigenvalues[top].max(0.0).sqrt();
    let mut v: Vec<f64> = e.eigenvectors[top].iter().map(|c| c * s).collect();
    match shape {
        ShadowShape::Moment { n } => {
            if y.dim() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    found: y.dim(),
                });
            }
            let v0 = v[0];
            if v0.abs() <= 1e-8 * norm2(&v).max(1e-300) {
                return Err(Error::NoFiniteAtom { corner: v0 });
            }
            Ok(v[1..].iter().map(|c| c / v0).collect())
        }
        ShadowShape::Gram { .. } | ShadowShape::Homogenized { .. } => {
            let cut = 1e-12 * norm2(&v);
            if let Some(first) = v.iter().find(|c| c.abs() > cut) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|c| *c = -*c);
                }
            }
            Ok(v)
        }
    }
}

/// Rank-one optimizer and its atom, derived from an optimal support solution.
#[derive(Clone, Debug, PartialEq)]
pub struct AttainedAtom {
    pub atom: Vec<f64>,
    /// Rank-one lifted point in shadow coordinates.
    pub lifted: SymMatrix,
    pub image: Vec<f64>,
    pub objective: f64,
    pub rank_before: usize,
}

/// Embeds inequalities as slacks, moves to a rank-one vertex of the optimal
/// face and extracts its atom.
pub fn attain_atom(shadow: &SpectrahedralShadow, p: &SdpProblem, sol: &SdpSolution) -> Result<AttainedAtom> {
    let n = shadow.lift_dim();
    let rank_before = numerical_rank(&sol.x, DEFAULT_RANK_TOL)?;
    let x = if p.constraints().iter().any(|c| c.sense == Sense::Geq) {
        let e = embed_equality_form(p)?;
        let mut esol = sol.clone();
        esol.x = embed_point(p, &sol.x);
        reduce_rank(&e, &esol)?.x.block(0, n)
    } else {
        reduce_rank(p, sol)?.x
    };
    let atom = extract_atom(&x, shadow.shape())?;
    let lifted = match shadow.shape() {
        ShadowShape::Moment { .. } => {
            let mut v = vec![1.0];
            v.extend_from_slice(&atom);
            SymMatrix::rank_one(&v)
        }
        _ => SymMatrix::rank_one(&atom),
    };
    let image = shadow.output(&lifted);
    Ok(AttainedAtom {
        objective: p.objective().dot(&lifted),
        atom,
        lifted,
        image,
        rank_before,
    })
}
