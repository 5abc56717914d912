//! Small dense SDP solver over a single PSD block.
//!
//! `Geq` rows get nonnegative scalar slacks internally; the iteration itself
//! lives in [`ipm`]. Every non-`Optimal` verdict carries a certificate that
//! is re-checked against the original data before it is returned.

mod ipm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_eigenvalue, min_eigenvalue, norm2, SymMatrix};
use ipm::{solve_conic, ConicProblem, ConicRow, ConicSolution, IpmExit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Eq,
    Geq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Min => 1.0,
            Direction::Max => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpConstraint {
    pub a: SymMatrix,
    pub b: f64,
    pub sense: Sense,
}

impl SdpConstraint {
    pub fn new(a: SymMatrix, b: f64, sense: Sense) -> Self {
        SdpConstraint { a, b, sense }
    }

    pub fn eq(a: SymMatrix, b: f64) -> Self {
        Self::new(a, b, Sense::Eq)
    }

    pub fn geq(a: SymMatrix, b: f64) -> Self {
        Self::new(a, b, Sense::Geq)
    }
}

/// `min/max C•X  s.t.  Aₖ•X (= or ≥) bₖ,  X ⪰ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    cone_dim: usize,
    objective: SymMatrix,
    constraints: Vec<SdpConstraint>,
    direction: Direction,
}

impl SdpProblem {
    pub fn new(
        objective: SymMatrix,
        constraints: Vec<SdpConstraint>,
        direction: Direction,
    ) -> Result<Self> {
        let n = objective.dim();
        if n == 0 {
            return Err(Error::validation("cone dimension must be positive"));
        }
        if constraints.is_empty() {
            return Err(Error::validation("an SDP needs at least one constraint"));
        }
        for (k, c) in constraints.iter().enumerate() {
            if c.a.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.a.dim(),
                });
            }
            if !c.b.is_finite() || !c.a.as_slice().iter().all(|v| v.is_finite()) {
                return Err(Error::validation(format!("constraint {k} has non-finite data")));
            }
        }
        if !objective.as_slice().iter().all(|v| v.is_finite()) {
            return Err(Error::validation("objective has non-finite entries"));
        }
        Ok(SdpProblem {
            cone_dim: n,
            objective,
            constraints,
            direction,
        })
    }

    pub fn cone_dim(&self) -> usize {
        self.cone_dim
    }

    pub fn objective(&self) -> &SymMatrix {
        &self.objective
    }

    pub fn constraints(&self) -> &[SdpConstraint] {
        &self.constraints
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn with_objective(&self, objective: SymMatrix, direction: Direction) -> Result<Self> {
        Self::new(objective, self.constraints.clone(), direction)
    }

    fn b_norm(&self) -> f64 {
        self.constraints.iter().map(|c| c.b * c.b).sum::<f64>().sqrt()
    }

    /// Largest constraint violation of `x`, absolute.
    pub fn max_violation(&self, x: &SymMatrix) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let v = c.a.dot(x) - c.b;
                match c.sense {
                    Sense::Eq => v.abs(),
                    Sense::Geq => (-v).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }

    fn conic(&self, c: SymMatrix) -> ConicProblem {
        let mut p = 0;
        let rows = self
            .constraints
            .iter()
            .map(|k| {
                let lp = match k.sense {
                    Sense::Eq => vec![],
                    Sense::Geq => {
                        p += 1;
                        vec![(p - 1, -1.0)]
                    }
                };
                ConicRow {
                    a: k.a.clone(),
                    lp,
                    b: k.b,
                }
            })
            .collect();
        ConicProblem {
            n: self.cone_dim,
            p,
            c,
            c_lp: vec![0.0; p],
            rows,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl SolverSettings {
    fn sanitized(self) -> Self {
        SolverSettings {
            tol: self.tol.clamp(1e-14, 1e-2),
            max_iter: self.max_iter.max(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Unbounded,
    Infeasible,
    NumericalTrouble,
}

/// Primal-dual pair. For `Min`, `S = C - Σ yₖAₖ` with `y ≥ 0` on `Geq` rows;
/// for `Max`, `S = Σ yₖAₖ - C` with `y ≤ 0` on `Geq` rows. Either way the
/// dual objective is `bᵀy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: SymMatrix,
    pub y: Vec<f64>,
    pub s: SymMatrix,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Improving ray (`Unbounded`), unit Frobenius norm.
    pub ray: Option<SymMatrix>,
    pub iterations: usize,
}

impl SdpSolution {
    fn empty(p: &SdpProblem, status: SdpStatus) -> Self {
        let n = p.cone_dim;
        SdpSolution {
            status,
            x: SymMatrix::zeros(n),
            y: vec![0.0; p.constraints.len()],
            s: SymMatrix::zeros(n),
            primal_obj: f64::NAN,
            dual_obj: f64::NAN,
            ray: None,
            iterations: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// Residuals of a primal-dual pair measured directly from the problem data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionCheck {
    /// Max constraint violation over `1 + ‖b‖`.
    pub primal_residual: f64,
    /// `‖S - (±(C - Σ yA))‖_F / (1 + ‖C‖_F)` plus any multiplier sign violation.
    pub dual_residual: f64,
    /// `|pobj - dobj| / (1 + |pobj|)`.
    pub gap: f64,
    pub min_eig_x: f64,
    pub min_eig_s: f64,
}

impl SolutionCheck {
    /// The `Optimal` invariants at tolerance `tol` (PSD and residuals) and
    /// `gap_tol` (duality gap).
    pub fn passes(&self, x: &SymMatrix, s: &SymMatrix, tol: f64, gap_tol: f64) -> bool {
        self.primal_residual <= tol
            && self.dual_residual <= tol
            && self.gap <= gap_tol
            && self.min_eig_x >= -tol * (1.0 + x.frobenius_norm())
            && self.min_eig_s >= -tol * (1.0 + s.frobenius_norm())
    }
}

pub fn check_solution(p: &SdpProblem, sol: &SdpSolution) -> Result<SolutionCheck> {
    let primal_residual = p.max_violation(&sol.x) / (1.0 + p.b_norm());
    let mut aty = SymMatrix::zeros(p.cone_dim);
    let mut sign_violation: f64 = 0.0;
    for (c, &yk) in p.constraints.iter().zip(&sol.y) {
        aty.axpy(yk, &c.a);
        if c.sense == Sense::Geq {
            let v = match p.direction {
                Direction::Min => -yk,
                Direction::Max => yk,
            };
            sign_violation = sign_violation.max(v);
        }
    }
    let expected = match p.direction {
        Direction::Min => p.objective.sub(&aty),
        Direction::Max => aty.sub(&p.objective),
    };
    let dual_residual = sol.s.sub(&expected).frobenius_norm() / (1.0 + p.objective.frobenius_norm())
        + sign_violation.max(0.0);
    let dobj: f64 = p.constraints.iter().zip(&sol.y).map(|(c, y)| c.b * y).sum();
    let pobj = p.objective.dot(&sol.x);
    Ok(SolutionCheck {
        primal_residual,
        dual_residual,
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
        min_eig_x: min_eigenvalue(&sol.x)?,
        min_eig_s: min_eigenvalue(&sol.s)?,
    })
}

/// True when `d` is a nonzero improving direction of the (feasible) problem:
/// `Aₖ•d = 0` (Eq), `≥ 0` (Geq), `d ⪰ 0` and `C•d` strictly improving, all at
/// tolerance `tol` after scaling `d` to unit Frobenius norm.
pub fn verify_ray(p: &SdpProblem, d: &SymMatrix, tol: f64) -> bool {
    let nrm = d.frobenius_norm();
    if !(nrm > 0.0) || !nrm.is_finite() || d.dim() != p.cone_dim {
        return false;
    }
    let d = d.scaled(1.0 / nrm);
    let rows_ok = p.constraints.iter().all(|c| {
        let v = c.a.dot(&d);
        let s = tol * (1.0 + c.a.frobenius_norm());
        match c.sense {
            Sense::Eq => v.abs() <= s,
            Sense::Geq => v >= -s,
        }
    });
    let improving = p.direction.sign() * p.objective.dot(&d) < -tol * (1.0 + p.objective.frobenius_norm());
    let psd = min_eigenvalue(&d).map(|l| l >= -tol).unwrap_or(false);
    rows_ok && improving && psd
}

/// True when `y` proves `{Aₖ•X (= or ≥) bₖ, X ⪰ 0}` empty:
/// `Σ yₖAₖ ⪯ 0`, `y ≥ 0` on Geq rows and `bᵀy > 0`, at tolerance `tol`
/// after scaling `y` to unit max-norm.
pub fn verify_farkas(p: &SdpProblem, y: &[f64], tol: f64) -> bool {
    if y.len() != p.constraints.len() {
        return false;
    }
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return false;
    }
    let mut aty = SymMatrix::zeros(p.cone_dim);
    let mut by = 0.0;
    let mut amax: f64 = 0.0;
    for (c, &yk) in p.constraints.iter().zip(y) {
        let yk = yk / scale;
        if c.sense == Sense::Geq && yk < -tol {
            return false;
        }
        aty.axpy(yk, &c.a);
        by += c.b * yk;
        amax = amax.max(c.a.frobenius_norm());
    }
    let top = max_eigenvalue(&aty).unwrap_or(f64::INFINITY);
    top <= tol * (1.0 + amax) && by > tol * (1.0 + p.b_norm())
}

/// Certificate y for rows that read `0 = b` with `b ≠ 0`.
fn trivially_infeasible(p: &SdpProblem) -> Option<Vec<f64>> {
    for (k, c) in p.constraints.iter().enumerate() {
        let bad = match c.sense {
            Sense::Eq => c.b != 0.0,
            Sense::Geq => c.b > 0.0,
        };
        if c.a.is_zero() && bad {
            let mut y = vec![0.0; p.constraints.len()];
            y[k] = c.b.signum();
            return Some(y);
        }
    }
    None
}

fn from_conic(p: &SdpProblem, s: &ConicSolution, status: SdpStatus) -> SdpSolution {
    let sign = p.direction.sign();
    let y: Vec<f64> = s.y.iter().map(|v| sign * v).collect();
    let dual_obj = p.constraints.iter().zip(&y).map(|(c, y)| c.b * y).sum();
    SdpSolution {
        status,
        x: s.x.clone(),
        y,
        s: s.z.clone(),
        primal_obj: p.objective.dot(&s.x),
        dual_obj,
        ray: None,
        iterations: s.iterations,
    }
}

fn unbounded(p: &SdpProblem, x: SymMatrix, ray: SymMatrix, iterations: usize) -> SdpSolution {
    let inf = -p.direction.sign() * f64::INFINITY;
    let nrm = ray.frobenius_norm();
    SdpSolution {
        status: SdpStatus::Unbounded,
        x,
        y: vec![0.0; p.constraints.len()],
        s: SymMatrix::zeros(p.cone_dim),
        primal_obj: inf,
        dual_obj: inf,
        ray: Some(ray.scaled(1.0 / nrm)),
        iterations,
    }
}

fn infeasible(p: &SdpProblem, y: Vec<f64>, iterations: usize) -> SdpSolution {
    let inf = p.direction.sign() * f64::INFINITY;
    let mut aty = SymMatrix::zeros(p.cone_dim);
    for (c, yk) in p.constraints.iter().zip(&y) {
        aty.axpy(*yk, &c.a);
    }
    SdpSolution {
        status: SdpStatus::Infeasible,
        x: SymMatrix::zeros(p.cone_dim),
        y,
        s: aty.scaled(-1.0),
        primal_obj: inf,
        dual_obj: inf,
        ray: None,
        iterations,
    }
}

/// Tolerance used to accept improving rays and Farkas certificates.
pub const CERT_TOL: f64 = 1e-7;

/// Searches `min ±C•D  s.t.  A_eq•D = 0, A_geq•D ≥ 0, I•D ≤ 1, D ⪰ 0`.
fn find_ray(p: &SdpProblem, settings: SolverSettings) -> Option<SymMatrix> {
    let n = p.cone_dim;
    let mut prob = p.conic(p.objective.scaled(p.direction.sign()));
    for r in &mut prob.rows {
        r.b = 0.0;
    }
    let w = prob.p;
    prob.p += 1;
    prob.c_lp.push(0.0);
    prob.rows.push(ConicRow {
        a: SymMatrix::identity(n),
        lp: vec![(w, 1.0)],
        b: 1.0,
    });
    let s = solve_conic(&prob, settings.tol, settings.max_iter);
    if s.pobj < -CERT_TOL * (1.0 + p.objective.frobenius_norm()) && verify_ray(p, &s.x, CERT_TOL) {
        Some(s.x)
    } else {
        None
    }
}

enum PhaseOne {
    Feasible(SymMatrix, usize),
    Infeasible(Vec<f64>, usize),
    Unknown(usize),
}

/// Elastic phase one: `min Σ (pₖ + nₖ) + ε I•X` with `Aₖ•X + pₖ - nₖ (= or ≥) bₖ`.
/// Its dual multipliers are the Farkas certificate when the optimum is positive.
fn phase_one(p: &SdpProblem, settings: SolverSettings) -> PhaseOne {
    let n = p.cone_dim;
    let eps = settings.tol;
    let mut idx = 0usize;
    let mut rows = Vec::with_capacity(p.constraints.len());
    let mut c_lp = Vec::new();
    for k in &p.constraints {
        let mut lp = vec![(idx, 1.0)];
        c_lp.push(1.0);
        idx += 1;
        lp.push((idx, -1.0));
        c_lp.push(if k.sense == Sense::Eq { 1.0 } else { 0.0 });
        idx += 1;
        rows.push(ConicRow {
            a: k.a.clone(),
            lp,
            b: k.b,
        });
    }
    let prob = ConicProblem {
        n,
        p: idx,
        c: SymMatrix::identity(n).scaled(eps),
        c_lp,
        rows,
    };
    let s = solve_conic(&prob, settings.tol, settings.max_iter);
    if verify_farkas(p, &s.y, CERT_TOL) && s.dobj > CERT_TOL * (1.0 + p.b_norm()) {
        return PhaseOne::Infeasible(s.y, s.iterations);
    }
    if p.max_violation(&s.x) <= CERT_TOL * (1.0 + p.b_norm()) {
        return PhaseOne::Feasible(s.x, s.iterations);
    }
    PhaseOne::Unknown(s.iterations)
}

pub fn solve(p: &SdpProblem, settings: SolverSettings) -> SdpSolution {
    let settings = settings.sanitized();
    if let Some(y) = trivially_infeasible(p) {
        return infeasible(p, y, 0);
    }
    let sign = p.direction.sign();
    let conic = p.conic(p.objective.scaled(sign));
    let s = solve_conic(&conic, settings.tol, settings.max_iter);
    match s.exit {
        IpmExit::Converged => {
            let sol = from_conic(p, &s, SdpStatus::Optimal);
            match check_solution(p, &sol) {
                Ok(chk) if chk.passes(&sol.x, &sol.s, CERT_TOL, 1e-6) => sol,
                _ => from_conic(p, &s, SdpStatus::NumericalTrouble),
            }
        }
        IpmExit::PrimalDiverged => {
            if verify_ray(p, &s.x, CERT_TOL) {
                return unbounded(p, s.x.clone(), s.x, s.iterations);
            }
            fallback(p, &s, settings)
        }
        IpmExit::DualDiverged => match phase_one(p, settings) {
            PhaseOne::Infeasible(y, it) => infeasible(p, y, s.iterations + it),
            _ => fallback(p, &s, settings),
        },
        IpmExit::Stalled | IpmExit::MaxIter | IpmExit::Breakdown => fallback(p, &s, settings),
    }
}

/// Decides a failed run by certificates alone.
fn fallback(p: &SdpProblem, s: &ConicSolution, settings: SolverSettings) -> SdpSolution {
    match phase_one(p, settings) {
        PhaseOne::Infeasible(y, it) => infeasible(p, y, s.iterations + it),
        PhaseOne::Feasible(x, it) => match find_ray(p, settings) {
            Some(ray) => unbounded(p, x, ray, s.iterations + it),
            None => {
                let mut sol = from_conic(p, s, SdpStatus::NumericalTrouble);
                sol.iterations += it;
                sol
            }
        },
        PhaseOne::Unknown(it) => {
            let mut sol = from_conic(p, s, SdpStatus::NumericalTrouble);
            sol.iterations += it;
            sol
        }
    }
}

/// Feasibility of the constraint system alone. `Optimal` carries a feasible
/// `X`; `Infeasible` carries a Farkas vector `y` (see [`verify_farkas`]).
pub fn feasibility(p: &SdpProblem, settings: SolverSettings) -> SdpSolution {
    let settings = settings.sanitized();
    if let Some(y) = trivially_infeasible(p) {
        return infeasible(p, y, 0);
    }
    match phase_one(p, settings) {
        PhaseOne::Feasible(x, it) => {
            let mut sol = SdpSolution::empty(p, SdpStatus::Optimal);
            sol.primal_obj = 0.0;
            sol.dual_obj = 0.0;
            sol.x = x;
            sol.iterations = it;
            sol
        }
        PhaseOne::Infeasible(y, it) => infeasible(p, y, it),
        PhaseOne::Unknown(it) => {
            let mut sol = SdpSolution::empty(p, SdpStatus::NumericalTrouble);
            sol.iterations = it;
            sol
        }
    }
}

/// Result of [`solve_elastic`].
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticResult {
    pub converged: bool,
    /// `Σ |Aₖ•X - bₖ|` over the elastic rows.
    pub distance: f64,
    pub x: SymMatrix,
    /// Dual multipliers of the elastic rows, each in `[-1, 1]`.
    pub multipliers: Vec<f64>,
}

/// `min Σ_{k ∈ elastic} |Aₖ•X - bₖ|` with every other row enforced as stated.
/// The objective of `p` is ignored.
pub fn solve_elastic(p: &SdpProblem, elastic: &[usize], settings: SolverSettings) -> ElasticResult {
    let settings = settings.sanitized();
    let n = p.cone_dim;
    let mut prob = p.conic(SymMatrix::identity(n).scaled(0.1 * settings.tol));
    for &k in elastic {
        let base = prob.p;
        prob.p += 2;
        prob.c_lp.extend([1.0, 1.0]);
        prob.rows[k].lp.extend([(base, 1.0), (base + 1, -1.0)]);
    }
    let s = solve_conic(&prob, settings.tol, settings.max_iter);
    let distance = elastic
        .iter()
        .map(|&k| {
            let c = &p.constraints[k];
            (c.a.dot(&s.x) - c.b).abs()
        })
        .sum();
    ElasticResult {
        converged: s.exit == IpmExit::Converged,
        distance,
        x: s.x,
        multipliers: elastic.iter().map(|&k| s.y[k]).collect(),
    }
}

/// Euclidean norm of the raw residual `b - A(X)` over Eq rows and the
/// shortfall over Geq rows.
pub fn residual_norm(p: &SdpProblem, x: &SymMatrix) -> f64 {
    let r: Vec<f64> = p
        .constraints
        .iter()
        .map(|c| {
            let v = c.a.dot(x) - c.b;
            match c.sense {
                Sense::Eq => v,
                Sense::Geq => (-v).max(0.0),
            }
        })
        .collect();
    norm2(&r)
}
