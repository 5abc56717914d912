//! Deterministic samples of the parameter set `T` and of its image.
//!
//! Half of the draws land on the boundary of `T` (where linear supports of
//! the image tend to be attained) and half are interior rejection samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, max_eigenvalue, norm2};
#[cfg(test)]
use crate::linalg::SymMatrix;
use crate::quadratic::{ConstraintKind, ProblemSpec, QuadraticConstraint, QuadraticFunction, SpecKind};
use crate::repr::spec_condition;

const MAX_DRAWS: usize = 1_000_000;
const MIN_ACCEPTANCE: f64 = 1e-3;

/// Where uniform draws come from before projection and rejection.
enum Region {
    /// `{ x : (x − c)ᵀ P (x − c) ≤ 1 }` with `P = L Lᵀ`.
    Ellipsoid { center: Vec<f64>, chol: Vec<f64> },
    Ball { radius: f64 },
}

impl Region {
    fn dim_point(&self, n: usize, rng: &mut ChaCha8Rng, on_surface: bool) -> Vec<f64> {
        let mut u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let nrm = norm2(&u).max(1e-300);
        let r = if on_surface { 1.0 } else { rng.random::<f64>().powf(1.0 / n as f64) };
        u.iter_mut().for_each(|c| *c *= r / nrm);
        match self {
            Region::Ball { radius } => u.iter().map(|c| c * radius).collect(),
            Region::Ellipsoid { center, chol } => {
                // x = c + L⁻ᵀ u so that (x − c)ᵀ L Lᵀ (x − c) = ‖u‖²
                let y = solve_upper_t(chol, n, &u);
                center.iter().zip(&y).map(|(a, b)| a + b).collect()
            }
        }
    }
}

/// Solves `Lᵀ y = u` for lower-triangular row-major `L`.
fn solve_upper_t(l: &[f64], n: usize, u: &[f64]) -> Vec<f64> {
    let mut y = u.to_vec();
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// `{q ≥ 0}` as an ellipsoid when `Q ≺ 0`.
fn ellipsoid_of(q: &QuadraticFunction) -> Option<Region> {
    let n = q.dim();
    if n == 0 || max_eigenvalue(q.quad()).ok()? >= 0.0 {
        return None;
    }
    let neg = q.quad().scaled(-1.0);
    let l = cholesky(neg.as_slice(), n)?;
    // center c = ½(−Q)⁻¹ d, peak value q(c)
    let half_d: Vec<f64> = q.linear().iter().map(|d| 0.5 * d).collect();
    let center = crate::linalg::cholesky_solve(&l, n, &half_d);
    let peak = q.at(&center);
    if !(peak > 0.0) {
        return None;
    }
    let scaled = neg.scaled(1.0 / peak);
    let chol = cholesky(scaled.as_slice(), n)?;
    Some(Region::Ellipsoid { center, chol })
}

/// Newton steps onto the zero sets of the equality constraints.
fn project(eqs: &[&QuadraticFunction], mut x: Vec<f64>) -> Option<Vec<f64>> {
    if eqs.is_empty() {
        return Some(x);
    }
    for _ in 0..60 {
        let vals: Vec<f64> = eqs.iter().map(|q| q.at(&x)).collect();
        let scale = 1.0 + dot(&x, &x);
        if vals.iter().all(|v| v.abs() <= 1e-12 * scale) {
            return Some(x);
        }
        let grads: Vec<Vec<f64>> = eqs.iter().map(|q| q.gradient(&x)).collect();
        // minimum-norm step: Jᵀ (J Jᵀ)⁻¹ v
        let k = eqs.len();
        let gram: Vec<f64> = (0..k * k).map(|ij| dot(&grads[ij / k], &grads[ij % k])).collect();
        let l = cholesky(&gram, k)?;
        let w = crate::linalg::cholesky_solve(&l, k, &vals);
        for (wi, g) in w.iter().zip(&grads) {
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi -= wi * gi;
            }
        }
    }
    None
}

struct Sampler<'a> {
    n: usize,
    region: Region,
    eqs: Vec<&'a QuadraticFunction>,
    ineqs: Vec<&'a QuadraticFunction>,
    /// Boundary draws use the surface of an ellipsoid constraint directly.
    exact_surface: bool,
}

impl Sampler<'_> {
    fn draw(&self, rng: &mut ChaCha8Rng, boundary: bool) -> Option<Vec<f64>> {
        let x = self.region.dim_point(self.n, rng, boundary && self.exact_surface);
        let x = project(&self.eqs, x)?;
        let x = if boundary && self.eqs.is_empty() && !self.exact_surface {
            // push an inequality-feasible draw onto the first constraint's zero set
            let q = self.ineqs.first()?;
            project(&[q], x)?
        } else {
            x
        };
        let ok = self.ineqs.iter().all(|q| q.at(&x) >= -1e-10 * (1.0 + dot(&x, &x)))
            && x.iter().all(|c| c.is_finite());
        ok.then_some(x)
    }
}

fn sampler(spec: &ProblemSpec) -> Result<Sampler<'_>> {
    let n = spec.n();
    let (eqs, ineqs): (Vec<&QuadraticConstraint>, Vec<&QuadraticConstraint>) =
        spec.constraints().iter().partition(|c| c.kind == ConstraintKind::Equality);
    let eqs: Vec<&QuadraticFunction> = eqs.iter().map(|c| &c.q).collect();
    let ineqs: Vec<&QuadraticFunction> = ineqs.iter().map(|c| &c.q).collect();

    let mut exact_surface = false;
    let region = match spec.kind() {
        SpecKind::SingleConstraint | SpecKind::Rational => {
            let q = &spec.constraints()[0].q;
            match ellipsoid_of(q) {
                Some(r) => {
                    exact_surface = true;
                    r
                }
                None => Region::Ball {
                    radius: heuristic_radius(q),
                },
            }
        }
        SpecKind::TwoHomogeneous => Region::Ball {
            radius: homogeneous_radius(spec)?.unwrap_or(10.0),
        },
    };
    Ok(Sampler {
        n,
        region,
        eqs,
        ineqs,
        exact_surface,
    })
}

/// Radius of a ball containing `T` from the S-lemma witness `μ` with
/// `μ₁B₁ + μ₂B₂ ≺ 0`: `‖x‖² ≤ (μ·c) / λ_min(−M)`.
fn homogeneous_radius(spec: &ProblemSpec) -> Result<Option<f64>> {
    let Some(report) = spec_condition(spec)? else {
        return Ok(None);
    };
    let Some((m1, m2)) = report.witness else {
        return Ok(None);
    };
    let c = spec.constraints();
    let mut m = c[0].q.quad().scaled(m1);
    m.axpy(m2, c[1].q.quad());
    let top = max_eigenvalue(&m)?;
    let mc = m1 * c[0].q.constant() + m2 * c[1].q.constant();
    if top >= 0.0 {
        return Ok(None);
    }
    Ok(Some((mc.max(0.0) / -top).sqrt().max(1e-6) * (1.0 + 1e-9)))
}

fn heuristic_radius(q: &QuadraticFunction) -> f64 {
    let qn = q.quad().frobenius_norm().max(1e-12);
    2.0 * (1.0 + (q.constant().abs() / qn).sqrt() + norm2(q.linear()) / qn).min(1e3)
}

/// `count` points of `T`, reproducible for a given `seed`.
pub fn sample_params(spec: &ProblemSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let s = sampler(spec)?;
    // independent streams per chunk keep the result deterministic under rayon
    let chunk = 256usize;
    let chunks = count.div_ceil(chunk);
    let parts: Vec<Result<Vec<Vec<f64>>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let want = chunk.min(count - c * chunk);
            let mut out = Vec::with_capacity(want);
            let mut draws = 0usize;
            while out.len() < want {
                draws += 1;
                if draws > MAX_DRAWS / chunks.max(1) + 10_000
                    && (out.len() as f64) < MIN_ACCEPTANCE * draws as f64
                {
                    return Err(Error::Sampling(format!(
                        "acceptance rate below {MIN_ACCEPTANCE} after {draws} draws"
                    )));
                }
                let boundary = out.len() % 2 == 0;
                if let Some(x) = s.draw(&mut rng, boundary) {
                    out.push(x);
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(count);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

/// Images `f(x)` (or `f(x)/f₀(x)`) of sampled parameter points.
pub fn sample_image(spec: &ProblemSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(sample_pairs(spec, count, seed)?.into_iter().map(|(_, y)| y).collect())
}

/// Parameter points paired with their images; rational draws with
/// `f₀ ≤ 1e-12` are skipped.
pub fn sample_pairs(spec: &ProblemSpec, count: usize, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let xs = sample_params(spec, count, seed)?;
    Ok(xs
        .into_iter()
        .filter_map(|x| spec.image(&x).map(|y| (x, y)))
        .collect())
}

/// `x^h = (1, x)/√f₀(x)`, the point of the homogenized set with the same image.
pub fn homogeneous_lift(spec: &ProblemSpec, x: &[f64]) -> Option<Vec<f64>> {
    let d = spec.denominator()?.at(x);
    if d <= 1e-12 {
        return None;
    }
    let s = 1.0 / d.sqrt();
    let mut v = vec![s];
    v.extend(x.iter().map(|c| c * s));
    Some(v)
}

/// Largest `ℓᵀy` over sampled image points.
pub fn sampled_support(points: &[Vec<f64>], ell: &[f64]) -> f64 {
    points
        .iter()
        .map(|y| dot(y, ell))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Grid maximum of `ℓᵀf(x)` over `T ∩ [−radius, radius]²` for two-variable
/// specs, a lower bound on the support that does not depend on sampling.
pub fn grid_support(spec: &ProblemSpec, ell: &[f64], radius: f64, step: f64) -> Result<f64> {
    if spec.n() != 2 {
        return Err(Error::validation("grid bounds need two parameters"));
    }
    if ell.len() != spec.m() {
        return Err(Error::DimensionMismatch {
            expected: spec.m(),
            found: ell.len(),
        });
    }
    let k = (2.0 * radius / step).round() as i64;
    let best = (0..=k)
        .into_par_iter()
        .map(|i| {
            let x1 = -radius + i as f64 * step;
            let mut best = f64::NEG_INFINITY;
            for j in 0..=k {
                let x = [x1, -radius + j as f64 * step];
                if !spec.contains_param(&x, 1e-12) {
                    continue;
                }
                if let Some(y) = spec.image(&x) {
                    best = best.max(dot(&y, ell));
                }
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}
