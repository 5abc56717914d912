//! Quadratic polynomials, their Gram lifts and homogenization, and the three
//! kinds of parameterized-set descriptions built from them.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Default coefficient tolerance for [`QuadraticFunction::is_homogeneous_modulo_constant`].
pub const DEFAULT_HOMOGENEITY_TOL: f64 = 1e-12;

/// `constant + linearᵀ x + xᵀ quad x`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFunction {
    constant: f64,
    linear: Vec<f64>,
    quad: SymMatrix,
}

impl QuadraticFunction {
    pub fn new(constant: f64, linear: Vec<f64>, quad: SymMatrix) -> Result<Self> {
        if linear.len() != quad.dim() {
            return Err(Error::DimensionMismatch {
                expected: quad.dim(),
                found: linear.len(),
            });
        }
        Ok(QuadraticFunction {
            constant,
            linear,
            quad,
        })
    }

    /// Like [`new`](Self::new) but takes the quadratic part as possibly
    /// asymmetric rows, replacing it by its symmetric part.
    pub fn from_rows(constant: f64, linear: Vec<f64>, quad_rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(constant, linear, SymMatrix::from_rows(quad_rows)?)
    }

    pub fn zero(n: usize) -> Self {
        QuadraticFunction {
            constant: 0.0,
            linear: vec![0.0; n],
            quad: SymMatrix::zeros(n),
        }
    }

    pub fn constant_fn(n: usize, c: f64) -> Self {
        let mut f = Self::zero(n);
        f.constant = c;
        f
    }

    pub fn linear_fn(linear: Vec<f64>) -> Self {
        let n = linear.len();
        QuadraticFunction {
            constant: 0.0,
            linear,
            quad: SymMatrix::zeros(n),
        }
    }

    /// Pure quadratic form `xᵀ quad x`.
    pub fn form(quad: SymMatrix) -> Self {
        let n = quad.dim();
        QuadraticFunction {
            constant: 0.0,
            linear: vec![0.0; n],
            quad,
        }
    }

    /// `r² - xᵀx`.
    pub fn ball(n: usize, radius: f64) -> Self {
        QuadraticFunction {
            constant: radius * radius,
            linear: vec![0.0; n],
            quad: SymMatrix::identity(n).scaled(-1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quad(&self) -> &SymMatrix {
        &self.quad
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.at(x))
    }

    /// Evaluation without the dimension check.
    #[inline]
    pub(crate) fn at(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.constant + crate::linalg::dot(&self.linear, x) + self.quad.quad_form(x)
    }

    /// `linear + 2 quad x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.quad
            .mul_vec(x)
            .iter()
            .zip(&self.linear)
            .map(|(qx, b)| 2.0 * qx + b)
            .collect()
    }

    pub fn gram(&self) -> GramForm {
        let n = self.dim();
        let matrix = SymMatrix::from_fn(n + 1, |i, j| match (i, j) {
            (0, 0) => self.constant,
            (0, j) => 0.5 * self.linear[j - 1],
            (i, j) => self.quad.get(i - 1, j - 1),
        });
        GramForm { matrix }
    }

    pub fn from_gram(g: &GramForm) -> Self {
        let m = &g.matrix;
        let n = m.dim() - 1;
        QuadraticFunction {
            constant: m.get(0, 0),
            linear: (1..=n).map(|j| 2.0 * m.get(0, j)).collect(),
            quad: m.block(1, n),
        }
    }

    /// `x₀² f(x/x₀)` as a pure form in `(x₀, x₁, …, xₙ)`.
    pub fn homogenize(&self) -> Self {
        Self::form(self.gram().matrix)
    }

    /// True iff every linear coefficient is within `tol` of zero.
    pub fn is_homogeneous_modulo_constant(&self, tol: f64) -> bool {
        self.linear.iter().all(|b| b.abs() <= tol)
    }

    /// `Σ wᵢ fᵢ`; `fs` must share one dimension and be non-empty unless `n` is given.
    pub fn combination(n: usize, weights: &[f64], fs: &[QuadraticFunction]) -> Result<Self> {
        if weights.len() != fs.len() {
            return Err(Error::DimensionMismatch {
                expected: fs.len(),
                found: weights.len(),
            });
        }
        let mut out = Self::zero(n);
        for (w, f) in weights.iter().zip(fs) {
            if f.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: f.dim(),
                });
            }
            out.constant += w * f.constant;
            for (a, b) in out.linear.iter_mut().zip(&f.linear) {
                *a += w * b;
            }
            out.quad.axpy(*w, &f.quad);
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        QuadraticFunction {
            constant: s * self.constant,
            linear: self.linear.iter().map(|b| s * b).collect(),
            quad: self.quad.scaled(s),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.linear.iter().all(|&b| b == 0.0) && self.quad.is_zero()
    }
}

/// Symmetric `(n+1)×(n+1)` lift `[[c, bᵀ/2], [b/2, F]]` with `[1 x]ᵀ G [1 x] = f(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramForm {
    pub matrix: SymMatrix,
}

pub fn gram(f: &QuadraticFunction) -> GramForm {
    f.gram()
}

pub fn homogenize(f: &QuadraticFunction) -> QuadraticFunction {
    f.homogenize()
}

pub fn evaluate(f: &QuadraticFunction, x: &[f64]) -> Result<f64> {
    f.evaluate(x)
}

pub fn is_homogeneous_modulo_constant(f: &QuadraticFunction, tol: f64) -> bool {
    f.is_homogeneous_modulo_constant(tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// `q(x) ≥ 0`
    Inequality,
    /// `q(x) = 0`
    Equality,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticConstraint {
    pub q: QuadraticFunction,
    pub kind: ConstraintKind,
}

impl QuadraticConstraint {
    pub fn new(q: QuadraticFunction, kind: ConstraintKind) -> Self {
        QuadraticConstraint { q, kind }
    }

    pub fn inequality(q: QuadraticFunction) -> Self {
        Self::new(q, ConstraintKind::Inequality)
    }

    pub fn equality(q: QuadraticFunction) -> Self {
        Self::new(q, ConstraintKind::Equality)
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let v = self.q.at(x);
        match self.kind {
            ConstraintKind::Inequality => (-v).max(0.0),
            ConstraintKind::Equality => v.abs(),
        }
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpecKind {
    /// Quadratic map over `{q ≥ 0}` or `{q = 0}`.
    SingleConstraint,
    /// Quadratic forms over two constraints `xᵀBⱼx - cⱼ (≥ or =) 0`.
    TwoHomogeneous,
    /// Quotients `fᵢ/f₀` over a single quadratic constraint.
    Rational,
}

/// Description of a quadratically parameterized set `{(f₁(x), …, f_m(x)) : x ∈ T}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    kind: SpecKind,
    n: usize,
    functions: Vec<QuadraticFunction>,
    constraints: Vec<QuadraticConstraint>,
    denominator: Option<QuadraticFunction>,
}

impl ProblemSpec {
    pub fn new(
        kind: SpecKind,
        n: usize,
        functions: Vec<QuadraticFunction>,
        constraints: Vec<QuadraticConstraint>,
        denominator: Option<QuadraticFunction>,
    ) -> Result<Self> {
        let spec = ProblemSpec {
            kind,
            n,
            functions,
            constraints,
            denominator,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn single_constraint(functions: Vec<QuadraticFunction>, constraint: QuadraticConstraint) -> Result<Self> {
        let n = constraint.dim();
        Self::new(SpecKind::SingleConstraint, n, functions, vec![constraint], None)
    }

    pub fn two_homogeneous(functions: Vec<QuadraticFunction>, constraints: [QuadraticConstraint; 2]) -> Result<Self> {
        let n = constraints[0].dim();
        Self::new(SpecKind::TwoHomogeneous, n, functions, constraints.to_vec(), None)
    }

    pub fn rational(
        functions: Vec<QuadraticFunction>,
        denominator: QuadraticFunction,
        constraint: QuadraticConstraint,
    ) -> Result<Self> {
        let n = constraint.dim();
        Self::new(SpecKind::Rational, n, functions, vec![constraint], Some(denominator))
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for (i, f) in self.functions.iter().enumerate() {
            if f.dim() != n {
                return Err(Error::validation(format!(
                    "function {i} has dimension {}, expected {n}",
                    f.dim()
                )));
            }
        }
        for (j, c) in self.constraints.iter().enumerate() {
            if c.dim() != n {
                return Err(Error::validation(format!(
                    "constraint {j} has dimension {}, expected {n}",
                    c.dim()
                )));
            }
        }
        match self.kind {
            SpecKind::SingleConstraint => {
                expect_count(self.constraints.len(), 1)?;
                if self.denominator.is_some() {
                    return Err(Error::validation("a denominator is only allowed for rational specs"));
                }
            }
            SpecKind::TwoHomogeneous => {
                expect_count(self.constraints.len(), 2)?;
                if self.denominator.is_some() {
                    return Err(Error::validation("a denominator is only allowed for rational specs"));
                }
                let tol = DEFAULT_HOMOGENEITY_TOL;
                for (i, f) in self.functions.iter().enumerate() {
                    if let Some((k, b)) = first_nonzero(f.linear(), tol) {
                        return Err(Error::validation(format!(
                            "function {i} has linear coefficient b[{k}] = {b}; two-homogeneous specs need pure forms"
                        )));
                    }
                    if f.constant().abs() > tol {
                        return Err(Error::validation(format!(
                            "function {i} has constant a = {}; two-homogeneous specs need pure forms",
                            f.constant()
                        )));
                    }
                }
                for (j, c) in self.constraints.iter().enumerate() {
                    if let Some((k, d)) = first_nonzero(c.q.linear(), tol) {
                        return Err(Error::validation(format!(
                            "constraint {j} has linear coefficient d[{k}] = {d}; only constants and forms are allowed"
                        )));
                    }
                }
            }
            SpecKind::Rational => {
                expect_count(self.constraints.len(), 1)?;
                match &self.denominator {
                    None => return Err(Error::validation("rational spec is missing its denominator")),
                    Some(f0) if f0.dim() != n => {
                        return Err(Error::validation(format!(
                            "denominator has dimension {}, expected {n}",
                            f0.dim()
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    /// Ambient parameter dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Output dimension.
    pub fn m(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> &[QuadraticFunction] {
        &self.functions
    }

    pub fn constraints(&self) -> &[QuadraticConstraint] {
        &self.constraints
    }

    pub fn denominator(&self) -> Option<&QuadraticFunction> {
        self.denominator.as_ref()
    }

    /// True iff `x` lies in the parameter set `T` up to `tol`.
    pub fn contains_param(&self, x: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|c| c.is_satisfied(x, tol))
    }

    /// Image of a parameter point; `None` for rational specs where `f₀(x) ≤ 1e-12`.
    pub fn image(&self, x: &[f64]) -> Option<Vec<f64>> {
        let vals: Vec<f64> = self.functions.iter().map(|f| f.at(x)).collect();
        match &self.denominator {
            None => Some(vals),
            Some(f0) => {
                let d = f0.at(x);
                if d <= 1e-12 {
                    None
                } else {
                    Some(vals.into_iter().map(|v| v / d).collect())
                }
            }
        }
    }
}

fn expect_count(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::validation(format!(
            "expected {expected} constraint(s), found {found}"
        )));
    }
    Ok(())
}

fn first_nonzero(v: &[f64], tol: f64) -> Option<(usize, f64)> {
    v.iter().copied().enumerate().find(|(_, b)| b.abs() > tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Second output of the ball example: 5 x1 x2 + 7 x1 x3 - 9 x2 x3.
    fn bilinear3() -> QuadraticFunction {
        QuadraticFunction::form(
            SymMatrix::from_rows(&[
                vec![0.0, 2.5, 3.5],
                vec![2.5, 0.0, -4.5],
                vec![3.5, -4.5, 0.0],
            ])
            .unwrap(),
        )
    }

    #[test]
    fn evaluate_examples() {
        let c = QuadraticFunction::constant_fn(2, 1.0);
        assert_eq!(c.evaluate(&[5.0, 5.0]).unwrap(), 1.0);
        let lin = QuadraticFunction::linear_fn(vec![3.0, -2.0, -4.0]);
        assert_eq!(lin.evaluate(&[1.0, 0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(bilinear3().evaluate(&[1.0, 1.0, 1.0]).unwrap(), 3.0);
        assert!(matches!(
            lin.evaluate(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn asymmetric_input_is_symmetrized() {
        let f = QuadraticFunction::from_rows(0.0, vec![0.0, 0.0], &[vec![1.0, 3.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(f.quad().get(0, 1), 2.0);
        let x = [0.7, -1.3];
        let direct = 0.7 * 0.7 + 3.0 * 0.7 * -1.3 + 1.0 * -1.3 * 0.7;
        assert!((f.at(&x) - direct).abs() < 1e-14);
    }

    #[test]
    fn homogenize_examples() {
        // x1²+x2²+x3² + x1+x2+x3  ->  x1²+x2²+x3² + x0(x1+x2+x3)
        let f = QuadraticFunction::new(0.0, vec![1.0; 3], SymMatrix::identity(3)).unwrap();
        let h = f.homogenize();
        assert_eq!(h.dim(), 4);
        assert!(h.linear().iter().all(|&b| b == 0.0) && h.constant() == 0.0);
        let x = [0.3, -0.5, 1.1, 2.0];
        let expected = x[1] * x[1] + x[2] * x[2] + x[3] * x[3] + x[0] * (x[1] + x[2] + x[3]);
        assert!((h.at(&x) - expected).abs() < 1e-14);

        let one = QuadraticFunction::constant_fn(2, 1.0).homogenize();
        assert_eq!(one.quad(), &SymMatrix::from_diag(&[1.0, 0.0, 0.0]));

        let ball = QuadraticFunction::ball(3, 1.0).homogenize();
        assert_eq!(ball.quad(), &SymMatrix::from_diag(&[1.0, -1.0, -1.0, -1.0]));
    }

    #[test]
    fn gram_examples() {
        assert_eq!(QuadraticFunction::zero(2).gram().matrix, SymMatrix::zeros(3));
        assert_eq!(
            QuadraticFunction::ball(3, 1.0).gram().matrix,
            SymMatrix::from_diag(&[1.0, -1.0, -1.0, -1.0])
        );
        let x1 = QuadraticFunction::linear_fn(vec![1.0]);
        assert_eq!(
            x1.gram().matrix,
            SymMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap()
        );
    }

    #[test]
    fn homogeneity_examples() {
        let cone = QuadraticFunction::form(SymMatrix::from_diag(&[1.0, -1.0, -1.0]));
        assert!(cone.is_homogeneous_modulo_constant(DEFAULT_HOMOGENEITY_TOL));
        let mixed = QuadraticFunction::new(0.0, vec![1.0], SymMatrix::identity(1)).unwrap();
        assert!(!mixed.is_homogeneous_modulo_constant(DEFAULT_HOMOGENEITY_TOL));
        assert!(QuadraticFunction::ball(3, 1.0).is_homogeneous_modulo_constant(DEFAULT_HOMOGENEITY_TOL));
    }

    #[test]
    fn spec_validation() {
        let ball = QuadraticConstraint::inequality(QuadraticFunction::ball(2, 1.0));
        let bad = QuadraticFunction::linear_fn(vec![1.0, 0.0]);
        let err = ProblemSpec::two_homogeneous(vec![bad], [ball.clone(), ball.clone()]).unwrap_err();
        assert!(err.to_string().contains("b[0]"), "{err}");
        let shifted = QuadraticConstraint::inequality(QuadraticFunction::new(1.0, vec![0.0, 0.5], SymMatrix::identity(2)).unwrap());
        let err = ProblemSpec::two_homogeneous(vec![], [ball.clone(), shifted]).unwrap_err();
        assert!(err.to_string().contains("d[1]"), "{err}");
        assert!(ProblemSpec::new(SpecKind::Rational, 2, vec![], vec![ball.clone()], None).is_err());
        assert!(ProblemSpec::new(SpecKind::SingleConstraint, 2, vec![], vec![ball.clone(), ball.clone()], None).is_err());
        let wrong_dim = QuadraticFunction::zero(3);
        assert!(ProblemSpec::single_constraint(vec![wrong_dim], ball).is_err());
    }

    #[test]
    fn rational_image_skips_vanishing_denominator() {
        let spec = ProblemSpec::rational(
            vec![QuadraticFunction::constant_fn(1, 2.0)],
            QuadraticFunction::form(SymMatrix::identity(1)),
            QuadraticConstraint::inequality(QuadraticFunction::ball(1, 1.0)),
        )
        .unwrap();
        assert!(spec.image(&[0.0]).is_none());
        assert_eq!(spec.image(&[0.5]).unwrap(), vec![8.0]);
    }

    fn arb_function() -> impl Strategy<Value = (QuadraticFunction, Vec<f64>, f64)> {
        (1usize..=6).prop_flat_map(|n| {
            (
                -5.0f64..5.0,
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(-5.0f64..5.0, n * n),
                prop::collection::vec(-3.0f64..3.0, n),
                0.01f64..10.0,
            )
                .prop_map(move |(c, b, q, x, t)| {
                    let quad = SymMatrix::from_row_major(n, &q).unwrap();
                    (QuadraticFunction::new(c, b, quad).unwrap(), x, t)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn gram_round_trip((f, _x, _t) in arb_function()) {
            prop_assert_eq!(QuadraticFunction::from_gram(&f.gram()), f);
        }

        #[test]
        fn homogenization_identity((f, x, t) in arb_function()) {
            let h = f.homogenize();
            let mut xh = vec![1.0];
            xh.extend_from_slice(&x);
            let fx = f.at(&x);
            let scale = 1.0 + fx.abs() + f.gram().matrix.max_abs() * (1.0 + crate::linalg::dot(&x, &x));
            prop_assert!((h.at(&xh) - fx).abs() <= 1e-13 * scale);
            let txh: Vec<f64> = xh.iter().map(|v| v * t).collect();
            prop_assert!((h.at(&txh) - t * t * fx).abs() <= 1e-12 * scale * t * t);
        }

        #[test]
        fn evaluate_matches_definition((f, x, _t) in arb_function()) {
            let mut direct = f.constant();
            for i in 0..f.dim() {
                direct += f.linear()[i] * x[i];
                for j in 0..f.dim() {
                    direct += x[i] * f.quad().get(i, j) * x[j];
                }
            }
            prop_assert!((f.at(&x) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }
}
