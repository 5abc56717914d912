//! Queries over a [`SpectrahedralShadow`]: support values, membership with
//! separating hyperplanes, boundary sweeps, rank reduction and atoms.

mod decompose;
mod rank;

use rayon::prelude::*;
use serde::Serialize;

pub use decompose::{decompose_moment, moment_matrix, AtomicMeasure};
pub use rank::{attain_atom, extract_atom, reduce_rank, AttainedAtom};

use crate::error::{Error, Result};
use crate::linalg::{norm2, SymMatrix};
use crate::repr::{ShadowShape, SpectrahedralShadow};
use crate::sdp::{self, Direction, SdpConstraint, SdpProblem, SdpSolution, SdpStatus, SolverSettings};

#[derive(Clone, Debug, PartialEq)]
pub struct SupportResult {
    pub status: SdpStatus,
    /// `±∞` when unbounded; `∓∞` when the shadow is empty.
    pub value: f64,
    pub optimizer: Option<SymMatrix>,
    /// `x` block of the optimizer for moment shapes.
    pub x_part: Option<Vec<f64>>,
    /// Output-map image of the optimizer.
    pub point: Option<Vec<f64>>,
    pub ray: Option<SymMatrix>,
    pub solution: SdpSolution,
    pub problem: SdpProblem,
}

impl SupportResult {
    pub fn is_finite(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

pub fn support(shadow: &SpectrahedralShadow, ell: &[f64], sense: Direction) -> Result<SupportResult> {
    support_with(shadow, ell, sense, SolverSettings::default())
}

pub fn support_with(
    shadow: &SpectrahedralShadow,
    ell: &[f64],
    sense: Direction,
    settings: SolverSettings,
) -> Result<SupportResult> {
    let (problem, offset) = shadow.support_problem(ell, sense)?;
    let sol = sdp::solve(&problem, settings);
    let up = match sense {
        Direction::Max => f64::INFINITY,
        Direction::Min => f64::NEG_INFINITY,
    };
    let (value, optimizer, ray) = match sol.status {
        SdpStatus::Optimal => (sol.primal_obj + offset, Some(sol.x.clone()), None),
        SdpStatus::Unbounded => (up, None, sol.ray.clone()),
        SdpStatus::Infeasible => (-up, None, None),
        SdpStatus::NumericalTrouble => {
            return Err(Error::NumericalTrouble(format!(
                "support solve did not converge after {} iterations",
                sol.iterations
            )))
        }
    };
    let x_part = match (shadow.shape(), &optimizer) {
        (ShadowShape::Moment { n }, Some(x)) => Some((1..=n).map(|i| x.get(0, i)).collect()),
        _ => None,
    };
    let point = optimizer.as_ref().map(|x| shadow.output(x));
    Ok(SupportResult {
        status: sol.status,
        value,
        optimizer,
        x_part,
        point,
        ray,
        solution: sol,
        problem,
    })
}

/// `ℓᵀy' ≥ ℓ₀` on the shadow while `ℓᵀy < ℓ₀` at the query point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separator {
    pub ell0: f64,
    pub ell: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipResult {
    pub inside: bool,
    /// L1 distance from the query point to the shadow's image.
    pub distance: f64,
    pub separator: Option<Separator>,
}

/// Points within this L1 distance (scaled by `1 + ‖y‖`) count as inside.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

pub fn membership(shadow: &SpectrahedralShadow, y: &[f64]) -> Result<MembershipResult> {
    membership_with(shadow, y, SolverSettings::default())
}

pub fn membership_with(shadow: &SpectrahedralShadow, y: &[f64], settings: SolverSettings) -> Result<MembershipResult> {
    let m = shadow.m();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: y.len(),
        });
    }
    let mut rows = shadow.sdp_constraints();
    let first = rows.len();
    for (o, yi) in shadow.outputs().iter().zip(y) {
        rows.push(SdpConstraint::eq(o.matrix.clone(), yi - o.constant));
    }
    let p = SdpProblem::new(SymMatrix::zeros(shadow.lift_dim()), rows, Direction::Min)?;
    let pins: Vec<usize> = (first..first + m).collect();
    let el = sdp::solve_elastic(&p, &pins, settings);
    let tol = MEMBERSHIP_TOL * (1.0 + norm2(y));
    if el.converged && el.distance <= tol {
        return Ok(MembershipResult {
            inside: true,
            distance: el.distance,
            separator: None,
        });
    }
    if !el.converged && el.distance <= tol {
        return Err(Error::NumericalTrouble("membership solve did not converge".into()));
    }
    // Dual multipliers w of the pins give ℓ = -w; fall back to the direction
    // from the query point toward the nearest lifted image.
    let nearest = shadow.output(&el.x);
    let mut candidates = vec![el.multipliers.iter().map(|w| -w).collect::<Vec<f64>>()];
    candidates.push(nearest.iter().zip(y).map(|(a, b)| a - b).collect());
    for ell in candidates {
        let scale = ell.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if !(scale > 0.0) {
            continue;
        }
        let ell: Vec<f64> = ell.iter().map(|v| v / scale).collect();
        let Ok(h) = support_with(shadow, &ell, Direction::Min, settings) else {
            continue;
        };
        if h.status != SdpStatus::Optimal {
            continue;
        }
        let at_y: f64 = ell.iter().zip(y).map(|(a, b)| a * b).sum();
        if at_y < h.value - 1e-9 * (1.0 + h.value.abs()) {
            return Ok(MembershipResult {
                inside: false,
                distance: el.distance,
                separator: Some(Separator { ell0: h.value, ell }),
            });
        }
    }
    if el.converged {
        return Err(Error::NumericalTrouble(format!(
            "point at distance {:e} could not be separated",
            el.distance
        )));
    }
    Err(Error::NumericalTrouble("membership solve did not converge".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub direction: [f64; 2],
    /// `+∞` for unbounded directions.
    pub support: f64,
    /// Image of the optimizer; `None` for unbounded directions.
    pub point: Option<[f64; 2]>,
    pub status: SdpStatus,
}

/// Support values in `k` directions evenly spaced on the circle.
pub fn boundary2d(shadow: &SpectrahedralShadow, k: usize) -> Result<Vec<BoundaryPoint>> {
    if shadow.m() != 2 {
        return Err(Error::validation(format!(
            "boundary sweeps need two outputs, found {}",
            shadow.m()
        )));
    }
    if k < 3 {
        return Err(Error::validation("boundary sweeps need at least 3 directions"));
    }
    (0..k)
        .into_par_iter()
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let (s, c) = theta.sin_cos();
            let r = support(shadow, &[c, s], Direction::Max)?;
            Ok(BoundaryPoint {
                theta,
                direction: [c, s],
                support: r.value,
                point: r.point.map(|p| [p[0], p[1]]),
                status: r.status,
            })
        })
        .collect()
}

/// `true` when `y` satisfies every finite support inequality of the sweep
/// within `tol` (the polygon circumscribing the hull).
pub fn inside_sweep(boundary: &[BoundaryPoint], y: [f64; 2], tol: f64) -> bool {
    boundary
        .iter()
        .filter(|b| b.support.is_finite())
        .all(|b| b.direction[0] * y[0] + b.direction[1] * y[1] <= b.support + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::{ProblemSpec, QuadraticConstraint, QuadraticFunction};
    use crate::repr::build;

    fn ball_shadow() -> SpectrahedralShadow {
        let f1 = QuadraticFunction::linear_fn(vec![3.0, -2.0, -4.0]);
        let f2 = QuadraticFunction::form(
            SymMatrix::from_rows(&[
                vec![0.0, 2.5, 3.5],
                vec![2.5, 0.0, -4.5],
                vec![3.5, -4.5, 0.0],
            ])
            .unwrap(),
        );
        let spec = ProblemSpec::single_constraint(
            vec![f1, f2],
            QuadraticConstraint::inequality(QuadraticFunction::ball(3, 1.0)),
        )
        .unwrap();
        build(&spec).unwrap()
    }

    #[test]
    fn ball_supports() {
        let s = ball_shadow();
        let r = support(&s, &[1.0, 0.0], Direction::Max).unwrap();
        assert!((r.value - 29f64.sqrt()).abs() < 1e-6, "{}", r.value);
        let r = support(&s, &[0.0, 1.0], Direction::Max).unwrap();
        assert!((r.value - 4.683583).abs() < 1e-5, "{}", r.value);
        let r = support(&s, &[0.0, 0.0], Direction::Max).unwrap();
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn ball_membership() {
        let s = ball_shadow();
        assert!(membership(&s, &[3.0, 0.0]).unwrap().inside);
        assert!(membership(&s, &[0.0, 0.0]).unwrap().inside);
        let out = membership(&s, &[10.0, 0.0]).unwrap();
        assert!(!out.inside);
        let sep = out.separator.unwrap();
        let at: f64 = sep.ell[0] * 10.0;
        assert!(at < sep.ell0);
    }

    #[test]
    fn single_point_boundary() {
        let spec = ProblemSpec::single_constraint(
            vec![QuadraticFunction::constant_fn(2, 1.0), QuadraticFunction::constant_fn(2, -2.0)],
            QuadraticConstraint::inequality(QuadraticFunction::ball(2, 1.0)),
        )
        .unwrap();
        let s = build(&spec).unwrap();
        let b = boundary2d(&s, 8).unwrap();
        assert_eq!(b.len(), 8);
        for p in b {
            let q = p.point.unwrap();
            assert!((q[0] - 1.0).abs() < 1e-7 && (q[1] + 2.0).abs() < 1e-7);
        }
    }
}
