//! Compares SDP support values of a shadow against independent oracles.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::dot;
use crate::ops::{attain_atom, support};
use crate::quadratic::{ProblemSpec, QuadraticFunction, SpecKind};
use crate::repr::{build, homogenize_spec};
use crate::sdp::{Direction, SdpStatus};

use super::gtrs::{gtrs_solve, has_slater_point};
use super::sample::{sample_image, sampled_support};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Exact one-constraint extremum.
    Gtrs,
    /// A rank-one optimizer whose atom lies in `T` and attains the SDP value.
    Attained,
    /// Best sampled image point only.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionRecord {
    pub ell: Vec<f64>,
    pub sdp_status: SdpStatus,
    pub sdp_value: f64,
    pub oracle: OracleKind,
    pub oracle_value: f64,
    pub sampled_value: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactnessReport {
    pub pass: bool,
    pub max_rel_gap: f64,
    pub records: Vec<DirectionRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactnessOptions {
    pub seed: u64,
    pub samples: usize,
}

impl Default for ExactnessOptions {
    fn default() -> Self {
        ExactnessOptions { seed: 0, samples: 2000 }
    }
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / b.abs().max(1.0)
}

pub fn check_exactness(spec: &ProblemSpec, directions: &[Vec<f64>], tol: f64) -> Result<ExactnessReport> {
    check_exactness_with(spec, directions, tol, ExactnessOptions::default())
}

/// Upper supports `max ℓᵀy` of the shadow against the oracle for each `ℓ`.
pub fn check_exactness_with(
    spec: &ProblemSpec,
    directions: &[Vec<f64>],
    tol: f64,
    opts: ExactnessOptions,
) -> Result<ExactnessReport> {
    let shadow = build(spec)?;
    let images = sample_image(spec, opts.samples, opts.seed)?;
    let homogenized = match spec.kind() {
        SpecKind::Rational => Some(homogenize_spec(spec)?),
        _ => None,
    };
    let slater = spec.kind() == SpecKind::SingleConstraint && has_slater_point(&spec.constraints()[0], opts.seed);

    let mut records = Vec::with_capacity(directions.len());
    for ell in directions {
        let s = support(&shadow, ell, Direction::Max)?;
        let sampled_value = sampled_support(&images, ell);
        let mut note = None;
        let (oracle, oracle_value) = match spec.kind() {
            SpecKind::SingleConstraint => {
                if slater {
                    let f = QuadraticFunction::combination(spec.n(), ell, spec.functions())?;
                    let g = gtrs_solve(&f, &spec.constraints()[0], Direction::Max)?;
                    (OracleKind::Gtrs, g.value)
                } else {
                    note = Some("no Slater point; oracle downgraded to samples".into());
                    (OracleKind::Sampled, sampled_value)
                }
            }
            SpecKind::TwoHomogeneous | SpecKind::Rational => {
                let target = homogenized.as_ref().unwrap_or(spec);
                match (s.status, &s.optimizer) {
                    (SdpStatus::Optimal, Some(_)) => match attain_atom(&shadow, &s.problem, &s.solution) {
                        Ok(a) if target.contains_param(&a.atom, 1e-6) => {
                            let v = dot(&a.image, ell);
                            (OracleKind::Attained, v)
                        }
                        Ok(_) => {
                            note = Some("rank-one optimizer left the parameter set".into());
                            (OracleKind::Sampled, sampled_value)
                        }
                        Err(e) => {
                            note = Some(format!("no rank-one optimizer: {e}"));
                            (OracleKind::Sampled, sampled_value)
                        }
                    },
                    _ => (OracleKind::Sampled, sampled_value),
                }
            }
        };
        let both_unbounded = s.value == f64::INFINITY && oracle_value == f64::INFINITY;
        let both_empty = s.value == f64::NEG_INFINITY && oracle_value == f64::NEG_INFINITY;
        let (abs_gap, gap) = if both_unbounded || both_empty {
            (0.0, 0.0)
        } else {
            ((s.value - oracle_value).abs(), rel_gap(s.value, oracle_value))
        };
        // samples lie in the image, so they never beat a correct support value
        let sample_ok = !(sampled_value > s.value + tol * s.value.abs().max(1.0));
        if !sample_ok {
            note = Some(format!("sampled value {sampled_value} exceeds the SDP value"));
        }
        let pass = gap <= tol && sample_ok && oracle != OracleKind::Sampled;
        records.push(DirectionRecord {
            ell: ell.clone(),
            sdp_status: s.status,
            sdp_value: s.value,
            oracle,
            oracle_value,
            sampled_value,
            abs_gap,
            rel_gap: gap,
            pass,
            note,
        });
    }
    let max_rel_gap = records.iter().map(|r| r.rel_gap).fold(0.0, f64::max);
    Ok(ExactnessReport {
        pass: records.iter().all(|r| r.pass),
        max_rel_gap,
        records,
    })
}
