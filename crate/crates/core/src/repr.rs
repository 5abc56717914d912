//! Semidefinite representations of the hull of a quadratic image: the moment
//! relaxation for one constraint, the Gram relaxation for two homogeneous
//! constraints, and the homogenized form of a rational map.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{max_eigenvalue, SymMatrix};
use crate::quadratic::{
    ConstraintKind, ProblemSpec, QuadraticConstraint, QuadraticFunction, SpecKind, DEFAULT_HOMOGENEITY_TOL,
};
use crate::sdp::{Direction, SdpConstraint, SdpProblem, Sense};

/// How the lifted variable relates to the parameter `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShadowShape {
    /// `[[1, xᵀ], [x, X]]`, lift dimension `n + 1`.
    Moment { n: usize },
    /// `X ≈ xxᵀ`, lift dimension `n`.
    Gram { n: usize },
    /// Gram lift of `x^h = (x₀, x)` for a rational map in `n` variables.
    Homogenized { n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "role", content = "index", rename_all = "snake_case")]
pub enum ConstraintRole {
    CornerPin,
    Localizing,
    Constraint(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffineConstraint {
    pub matrix: SymMatrix,
    pub rhs: f64,
    pub sense: Sense,
    #[serde(flatten)]
    pub role: ConstraintRole,
}

/// `y = matrix • X + constant`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputFunctional {
    pub matrix: SymMatrix,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrahedralShadow {
    lift_dim: usize,
    shape: ShadowShape,
    constraints: Vec<AffineConstraint>,
    outputs: Vec<OutputFunctional>,
}

impl SpectrahedralShadow {
    pub fn lift_dim(&self) -> usize {
        self.lift_dim
    }

    pub fn shape(&self) -> ShadowShape {
        self.shape
    }

    pub fn constraints(&self) -> &[AffineConstraint] {
        &self.constraints
    }

    pub fn outputs(&self) -> &[OutputFunctional] {
        &self.outputs
    }

    /// Output dimension `m`.
    pub fn m(&self) -> usize {
        self.outputs.len()
    }

    pub fn output(&self, x: &SymMatrix) -> Vec<f64> {
        self.outputs.iter().map(|o| o.matrix.dot(x) + o.constant).collect()
    }

    /// `(Σ ℓᵢ Aᵢ, Σ ℓᵢ cᵢ)`.
    pub fn linear_objective(&self, ell: &[f64]) -> Result<(SymMatrix, f64)> {
        if ell.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: ell.len(),
            });
        }
        let mut c = SymMatrix::zeros(self.lift_dim);
        let mut k = 0.0;
        for (o, &l) in self.outputs.iter().zip(ell) {
            if l != 0.0 {
                c.axpy(l, &o.matrix);
                k += l * o.constant;
            }
        }
        Ok((c, k))
    }

    pub fn sdp_constraints(&self) -> Vec<SdpConstraint> {
        self.constraints
            .iter()
            .map(|c| SdpConstraint::new(c.matrix.clone(), c.rhs, c.sense))
            .collect()
    }

    /// The support problem `max/min ℓ • output(X)` over the shadow, without the
    /// constant offset (returned alongside).
    pub fn support_problem(&self, ell: &[f64], direction: Direction) -> Result<(SdpProblem, f64)> {
        let (c, k) = self.linear_objective(ell)?;
        Ok((SdpProblem::new(c, self.sdp_constraints(), direction)?, k))
    }

    /// Largest constraint violation of `x` (absolute); `∞` if not PSD to `1e-9`.
    pub fn violation(&self, x: &SymMatrix) -> f64 {
        if x.dim() != self.lift_dim {
            return f64::INFINITY;
        }
        let lin = self
            .constraints
            .iter()
            .map(|c| {
                let v = c.matrix.dot(x) - c.rhs;
                match c.sense {
                    Sense::Eq => v.abs(),
                    Sense::Geq => (-v).max(0.0),
                }
            })
            .fold(0.0, f64::max);
        if crate::linalg::psd_cone_projection_check(x, 1e-9) {
            lin
        } else {
            f64::INFINITY
        }
    }

    /// Lift of a parameter point into the shadow: `(1, x)(1, x)ᵀ`, `xxᵀ`, or
    /// `x^h x^hᵀ` with `x^h = (1, x)/√f₀(x)`. `None` when the denominator
    /// does not allow it.
    pub fn lift_point(&self, x: &[f64], denominator: Option<&QuadraticFunction>) -> Option<SymMatrix> {
        match self.shape {
            ShadowShape::Moment { n } | ShadowShape::Homogenized { n } if x.len() != n => None,
            ShadowShape::Gram { n } if x.len() != n => None,
            ShadowShape::Moment { .. } => {
                let mut v = vec![1.0];
                v.extend_from_slice(x);
                Some(SymMatrix::rank_one(&v))
            }
            ShadowShape::Gram { .. } => Some(SymMatrix::rank_one(x)),
            ShadowShape::Homogenized { .. } => {
                let d = denominator?.evaluate(x).ok()?;
                if d <= 1e-12 {
                    return None;
                }
                let s = 1.0 / d.sqrt();
                let mut v = vec![s];
                v.extend(x.iter().map(|xi| xi * s));
                Some(SymMatrix::rank_one(&v))
            }
        }
    }
}

fn sense_of(kind: ConstraintKind) -> Sense {
    match kind {
        ConstraintKind::Inequality => Sense::Geq,
        ConstraintKind::Equality => Sense::Eq,
    }
}

/// Moment relaxation of a single-constraint spec.
pub fn build_single(spec: &ProblemSpec) -> Result<SpectrahedralShadow> {
    if spec.kind() != SpecKind::SingleConstraint {
        return Err(Error::validation("build_single needs a single-constraint spec"));
    }
    let n = spec.n();
    let mut corner = SymMatrix::zeros(n + 1);
    corner.set(0, 0, 1.0);
    let q = &spec.constraints()[0];
    let mut localizing = q.q.gram().matrix;
    localizing.set(0, 0, 0.0);
    let constraints = vec![
        AffineConstraint {
            matrix: corner,
            rhs: 1.0,
            sense: Sense::Eq,
            role: ConstraintRole::CornerPin,
        },
        AffineConstraint {
            matrix: localizing,
            rhs: -q.q.constant(),
            sense: sense_of(q.kind),
            role: ConstraintRole::Localizing,
        },
    ];
    let outputs = spec
        .functions()
        .iter()
        .map(|f| {
            let mut g = f.gram().matrix;
            g.set(0, 0, 0.0);
            OutputFunctional {
                matrix: g,
                constant: f.constant(),
            }
        })
        .collect();
    Ok(SpectrahedralShadow {
        lift_dim: n + 1,
        shape: ShadowShape::Moment { n },
        constraints,
        outputs,
    })
}

fn first_linear(f: &QuadraticFunction) -> Option<(usize, f64)> {
    f.linear()
        .iter()
        .enumerate()
        .find(|(_, v)| v.abs() > DEFAULT_HOMOGENEITY_TOL)
        .map(|(k, v)| (k, *v))
}

/// Gram relaxation of a two-homogeneous spec: `X ⪰ 0`, `Bⱼ•X (≥ or =) cⱼ`.
pub fn build_two_homogeneous(spec: &ProblemSpec) -> Result<SpectrahedralShadow> {
    if spec.kind() != SpecKind::TwoHomogeneous {
        return Err(Error::validation("build_two_homogeneous needs a two-homogeneous spec"));
    }
    gram_relaxation(spec, ShadowShape::Gram { n: spec.n() })
}

fn gram_relaxation(spec: &ProblemSpec, shape: ShadowShape) -> Result<SpectrahedralShadow> {
    let n = spec.n();
    for (i, f) in spec.functions().iter().enumerate() {
        if let Some((k, b)) = first_linear(f) {
            return Err(Error::validation(format!("function {i} has linear coefficient b[{k}] = {b}")));
        }
    }
    let mut constraints = Vec::with_capacity(2);
    for (j, c) in spec.constraints().iter().enumerate() {
        if let Some((k, d)) = first_linear(&c.q) {
            return Err(Error::validation(format!("constraint {j} has linear coefficient d[{k}] = {d}")));
        }
        constraints.push(AffineConstraint {
            matrix: c.q.quad().clone(),
            rhs: -c.q.constant(),
            sense: sense_of(c.kind),
            role: ConstraintRole::Constraint(j),
        });
    }
    let outputs = spec
        .functions()
        .iter()
        .map(|f| OutputFunctional {
            matrix: f.quad().clone(),
            constant: f.constant(),
        })
        .collect();
    Ok(SpectrahedralShadow {
        lift_dim: n,
        shape,
        constraints,
        outputs,
    })
}

/// Two-homogeneous spec in `(x₀, x)`: `x^hᵀ F₀ x^h = 1` and `x^hᵀ G x^h (≥ or =) 0`.
pub fn homogenize_spec(spec: &ProblemSpec) -> Result<ProblemSpec> {
    let f0 = spec
        .denominator()
        .ok_or_else(|| Error::validation("homogenize_spec needs a denominator"))?;
    if spec.kind() != SpecKind::Rational || spec.constraints().len() != 1 {
        return Err(Error::validation("homogenize_spec needs a rational spec with one constraint"));
    }
    let g = &spec.constraints()[0];
    let f0h = f0.homogenize();
    let pin = QuadraticFunction::new(-1.0, vec![0.0; spec.n() + 1], f0h.quad().clone())?;
    let functions = spec.functions().iter().map(|f| f.homogenize()).collect();
    ProblemSpec::two_homogeneous(
        functions,
        [
            QuadraticConstraint::equality(pin),
            QuadraticConstraint::new(g.q.homogenize(), g.kind),
        ],
    )
}

/// Shadow for any spec kind; rational specs go through [`homogenize_spec`].
pub fn build(spec: &ProblemSpec) -> Result<SpectrahedralShadow> {
    match spec.kind() {
        SpecKind::SingleConstraint => build_single(spec),
        SpecKind::TwoHomogeneous => build_two_homogeneous(spec),
        SpecKind::Rational => {
            let h = homogenize_spec(spec)?;
            gram_relaxation(&h, ShadowShape::Homogenized { n: spec.n() })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub holds: bool,
    pub witness: Option<(f64, f64)>,
    /// Smallest achievable `λ_max(μ₁B₁ + μ₂B₂)` over admissible unit `μ`.
    pub margin: f64,
}

/// Decision threshold factor: holds iff `margin < -CONDITION_TOL·(1 + max‖Bⱼ‖_F)`.
pub const CONDITION_TOL: f64 = 1e-9;

/// Admissible angle interval `[lo, hi]` for `(μ₁, μ₂) = (cos θ, sin θ)`.
pub fn admissible_arc(kinds: (ConstraintKind, ConstraintKind)) -> (f64, f64) {
    use std::f64::consts::{FRAC_PI_2, PI};
    use ConstraintKind::*;
    match kinds {
        (Inequality, Inequality) => (0.0, FRAC_PI_2),
        (Equality, Inequality) => (0.0, PI),
        (Inequality, Equality) => (-FRAC_PI_2, FRAC_PI_2),
        (Equality, Equality) => (0.0, 2.0 * PI),
    }
}

fn pencil_max(b1: &SymMatrix, b2: &SymMatrix, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let mut m = b1.scaled(c);
    m.axpy(s, b2);
    max_eigenvalue(&m).unwrap_or(f64::INFINITY)
}

/// Searches the admissible arc for `(μ₁, μ₂)` with `μ₁B₁ + μ₂B₂ ≺ 0`.
pub fn check_condition(
    b1: &SymMatrix,
    b2: &SymMatrix,
    kinds: (ConstraintKind, ConstraintKind),
    tol: f64,
) -> Result<ConditionReport> {
    if b1.dim() != b2.dim() {
        return Err(Error::DimensionMismatch {
            expected: b1.dim(),
            found: b2.dim(),
        });
    }
    let (lo, hi) = admissible_arc(kinds);
    let full = kinds == (ConstraintKind::Equality, ConstraintKind::Equality);
    let cells = 720usize;
    let h = (hi - lo) / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|k| pencil_max(b1, b2, lo + k as f64 * h)).collect();

    let mut best_theta = lo;
    let mut best = f64::INFINITY;
    for k in 0..=cells {
        let left = if k > 0 { grid[k - 1] } else if full { grid[cells - 1] } else { f64::INFINITY };
        let right = if k < cells { grid[k + 1] } else if full { grid[1] } else { f64::INFINITY };
        if grid[k] > left || grid[k] > right {
            continue;
        }
        let a = (lo + (k as f64 - 1.0) * h).max(if full { f64::NEG_INFINITY } else { lo });
        let b = (lo + (k as f64 + 1.0) * h).min(if full { f64::INFINITY } else { hi });
        let (t, v) = golden_min(|t| pencil_max(b1, b2, t), a, b);
        let (t, v) = if v < grid[k] { (t, v) } else { (lo + k as f64 * h, grid[k]) };
        if v < best {
            best = v;
            best_theta = t;
        }
    }
    let scale = 1.0 + b1.frobenius_norm().max(b2.frobenius_norm());
    let (s, c) = best_theta.sin_cos();
    let snap = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
    let witness = (snap(c), snap(s));
    let verified = {
        let mut m = b1.scaled(witness.0);
        m.axpy(witness.1, b2);
        max_eigenvalue(&m)? < 0.0
    };
    let holds = best < -tol * scale && verified;
    Ok(ConditionReport {
        holds,
        witness: holds.then_some(witness),
        margin: best,
    })
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Condition report for a two-homogeneous or rational spec (on its
/// homogenization); `None` for single-constraint specs.
pub fn spec_condition(spec: &ProblemSpec) -> Result<Option<ConditionReport>> {
    let h = match spec.kind() {
        SpecKind::SingleConstraint => return Ok(None),
        SpecKind::TwoHomogeneous => spec.clone(),
        SpecKind::Rational => homogenize_spec(spec)?,
    };
    let c = h.constraints();
    check_condition(c[0].q.quad(), c[1].q.quad(), (c[0].kind, c[1].kind), CONDITION_TOL).map(Some)
}

/// Turns every `Geq` row into an equality by appending a diagonal slack entry
/// with coefficient −1; the objective is padded with zeros. Equality rows are
/// copied as they are.
pub fn embed_equality_form(p: &SdpProblem) -> Result<SdpProblem> {
    let geq = p.constraints().iter().filter(|c| c.sense == Sense::Geq).count();
    if geq == 0 {
        return Err(Error::validation("embed_equality_form needs at least one inequality row"));
    }
    let n = p.cone_dim();
    let big = n + geq;
    let mut slot = n;
    let rows = p
        .constraints()
        .iter()
        .map(|c| {
            let mut a = c.a.embed(big, 0);
            if c.sense == Sense::Geq {
                a.set(slot, slot, -1.0);
                slot += 1;
            }
            SdpConstraint::eq(a, c.b)
        })
        .collect();
    SdpProblem::new(p.objective().embed(big, 0), rows, p.direction())
}

/// Feasible point of the embedded problem built from one of the original:
/// `diag(X, s)` with slacks `sₖ = max(0, Aₖ•X - bₖ)`.
pub fn embed_point(p: &SdpProblem, x: &SymMatrix) -> SymMatrix {
    let n = p.cone_dim();
    let slacks: Vec<f64> = p
        .constraints()
        .iter()
        .filter(|c| c.sense == Sense::Geq)
        .map(|c| (c.a.dot(x) - c.b).max(0.0))
        .collect();
    let mut y = x.embed(n + slacks.len(), 0);
    for (k, s) in slacks.iter().enumerate() {
        y.set(n + k, n + k, *s);
    }
    y
}
