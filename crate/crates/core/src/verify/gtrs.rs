//! Exact extremum of one quadratic over `{q ≥ 0}` or `{q = 0}` through the
//! concave dual `φ(λ) = inf_x f(x) − λ q(x)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, eigendecompose, min_eigenvalue, norm2, SymMatrix};
use crate::quadratic::{ConstraintKind, QuadraticConstraint, QuadraticFunction};
use crate::sdp::Direction;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GtrsResult {
    /// Optimal value; `∓∞` when the problem is unbounded in the requested sense.
    pub value: f64,
    /// Optimizer (minimizer for `Min`, maximizer for `Max`).
    pub argmin: Option<Vec<f64>>,
    /// Multiplier of the minimization of `±f`: `∇(±f) = λ ∇q`.
    pub multiplier: f64,
    pub hard_case: bool,
    /// `‖∇(±f) − λ∇q‖ / (1 + ‖∇f‖)` at the optimizer.
    pub stationarity: f64,
}

const BISECTIONS: usize = 80;

struct Pencil<'a> {
    f: &'a QuadraticFunction,
    q: &'a QuadraticFunction,
}

/// Stationary point of `f − λq` via the pseudo-inverse of `F − λQ`, plus the
/// null space of the pencil and whether the linear part lies in its range.
struct Stationary {
    x: Vec<f64>,
    null: Vec<Vec<f64>>,
    in_range: bool,
}

impl Pencil<'_> {
    fn hessian(&self, lambda: f64) -> SymMatrix {
        let mut h = self.f.quad().clone();
        h.axpy(-lambda, self.q.quad());
        h
    }

    fn lin(&self, lambda: f64) -> Vec<f64> {
        self.f
            .linear()
            .iter()
            .zip(self.q.linear())
            .map(|(b, d)| b - lambda * d)
            .collect()
    }

    fn lam_min(&self, lambda: f64) -> f64 {
        min_eigenvalue(&self.hessian(lambda)).unwrap_or(f64::NEG_INFINITY)
    }

    fn stationary(&self, lambda: f64) -> Result<Stationary> {
        let h = self.hessian(lambda);
        let g = self.lin(lambda);
        let e = eigendecompose(&h)?;
        let scale = 1.0 + e.max_abs_eigenvalue();
        let cut = 1e-10 * scale;
        let n = g.len();
        let mut x = vec![0.0; n];
        let mut null = Vec::new();
        let mut in_range = true;
        for (mu, v) in e.eigenvalues.iter().zip(&e.eigenvectors) {
            let c = dot(v, &g);
            if *mu > cut {
                for i in 0..n {
                    x[i] -= 0.5 * c / mu * v[i];
                }
            } else {
                if c.abs() > 1e-8 * (1.0 + norm2(&g)) {
                    in_range = false;
                }
                null.push(v.clone());
            }
        }
        Ok(Stationary { x, null, in_range })
    }

    fn psi(&self, lambda: f64) -> Result<f64> {
        let s = self.stationary(lambda)?;
        Ok(self.q.at(&s.x))
    }
}

/// Maximizer of a concave function on `[a, b]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc > fd {
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
    }
    0.5 * (a + b)
}

/// Bisection for the boundary of `{g ≥ 0}` between `inside` (g ≥ 0) and
/// `outside` (g < 0).
fn edge(g: impl Fn(f64) -> f64, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if g(mid) >= 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// `min f` (or `max f`) over `{q ≥ 0}` / `{q = 0}`.
pub fn gtrs_solve(f: &QuadraticFunction, constraint: &QuadraticConstraint, sense: Direction) -> Result<GtrsResult> {
    if f.dim() != constraint.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: constraint.dim(),
        });
    }
    let sign = match sense {
        Direction::Min => 1.0,
        Direction::Max => -1.0,
    };
    let fm = f.scaled(sign);
    let q = &constraint.q;
    let eq = constraint.kind == ConstraintKind::Equality;
    let pencil = Pencil { f: &fm, q };
    let g = |l: f64| pencil.lam_min(l);

    // admissible multipliers: λ ≥ 0 for inequalities, free for equalities
    let mut grid: Vec<f64> = (-30..=40).map(|k| 2f64.powi(k)).collect();
    if eq {
        let neg: Vec<f64> = grid.iter().rev().map(|v| -v).collect();
        grid = neg.into_iter().chain(std::iter::once(0.0)).chain(grid).collect();
    } else {
        grid.insert(0, 0.0);
    }
    let vals: Vec<f64> = grid.iter().map(|&l| g(l)).collect();
    let best = (0..grid.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let lo_b = grid[best.saturating_sub(1)];
    let hi_b = grid[(best + 1).min(grid.len() - 1)];
    let lhat = if lo_b < hi_b { golden_max(&g, lo_b, hi_b) } else { grid[best] };
    let (lhat, ghat) = if g(lhat) >= vals[best] { (lhat, g(lhat)) } else { (grid[best], vals[best]) };
    let hscale = 1.0 + fm.quad().frobenius_norm() + q.quad().frobenius_norm() * (1.0 + lhat.abs());
    let unbounded = || GtrsResult {
        value: -sign * f64::INFINITY,
        argmin: None,
        multiplier: f64::NAN,
        hard_case: false,
        stationarity: f64::NAN,
    };
    if ghat < -1e-12 * hscale {
        return Ok(unbounded());
    }

    // PSD interval [λl, λu] of the pencil within the admissible set
    let far = 2f64.powi(40);
    let lam_l = if !eq && g(0.0) >= 0.0 {
        0.0
    } else {
        match grid[..=best].iter().rposition(|&l| g(l) < 0.0 && l < lhat) {
            Some(k) => edge(&g, lhat, grid[k]),
            None => f64::NEG_INFINITY,
        }
    };
    let lam_u = match grid.iter().position(|&l| l > lhat && g(l) < 0.0) {
        Some(k) => edge(&g, lhat, grid[k]),
        None => f64::INFINITY,
    };
    let lam_l = if lam_l.is_finite() || !eq { lam_l.max(if eq { f64::NEG_INFINITY } else { 0.0 }) } else { lam_l };

    // ψ(λ) = q(x(λ)) increases on the open interval; its zero is λ*.
    let end_value = |l: f64, upper: bool| -> Result<(f64, Stationary)> {
        let s = pencil.stationary(l)?;
        let v = if s.in_range {
            q.at(&s.x)
        } else if upper {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        Ok((v, s))
    };

    let finish = |x: Vec<f64>, lambda: f64, hard: bool| -> Result<GtrsResult> {
        let x = polish(q, x, eq, lambda);
        let gf = fm.gradient(&x);
        let gq = q.gradient(&x);
        let r: Vec<f64> = gf.iter().zip(&gq).map(|(a, b)| a - lambda * b).collect();
        Ok(GtrsResult {
            value: f.at(&x),
            argmin: Some(x),
            multiplier: lambda,
            hard_case: hard,
            stationarity: norm2(&r) / (1.0 + norm2(&gf)),
        })
    };

    // hard case: pin to an endpoint and slide along the pencil's null space
    let slide = |l: f64, s: Stationary| -> Result<GtrsResult> {
        let x0 = s.x;
        let val = q.at(&x0);
        if val.abs() <= 1e-14 || (!eq && l == 0.0 && val >= 0.0) {
            return finish(x0, l, true);
        }
        for z in &s.null {
            let a = q.quad().quad_form(z);
            let b = dot(&q.gradient(&x0), z);
            if let Some(tau) = smallest_root(a, b, val) {
                let x: Vec<f64> = x0.iter().zip(z).map(|(xi, zi)| xi + tau * zi).collect();
                return finish(x, l, true);
            }
        }
        Err(Error::Oracle(format!(
            "hard case at λ = {l}: no null-space move reaches q = 0"
        )))
    };

    if lam_l.is_finite() && lam_u.is_finite() && (lam_u - lam_l) <= 1e-12 * (1.0 + lam_l.abs()) {
        let (_, s) = end_value(lam_l, false)?;
        if !s.in_range {
            return Ok(unbounded());
        }
        return slide(lam_l, s);
    }

    let mut lo = if lam_l.is_finite() { lam_l } else { lhat.min(0.0) - 1.0 };
    let mut hi = if lam_u.is_finite() { lam_u } else { lhat.max(0.0) + 1.0 };

    if lam_l.is_finite() {
        let (v, s) = end_value(lam_l, false)?;
        if v >= 0.0 {
            if !eq && lam_l == 0.0 {
                return finish(s.x, 0.0, false);
            }
            return slide(lam_l, s);
        }
    } else {
        let mut k = 0;
        while pencil.psi(lo)? > 0.0 {
            lo = 2.0 * lo - 1.0;
            k += 1;
            if k > 80 || lo < -far * far {
                return Err(Error::Oracle("no multiplier bracket below".into()));
            }
        }
    }
    if lam_u.is_finite() {
        let (v, s) = end_value(lam_u, true)?;
        if v <= 0.0 {
            return slide(lam_u, s);
        }
    } else {
        let mut k = 0;
        while pencil.psi(hi)? < 0.0 {
            hi = 2.0 * hi + 1.0;
            k += 1;
            if k > 80 || hi > far * far {
                return Err(Error::Oracle(
                    "constraint value stays negative for every multiplier; no feasible point".into(),
                ));
            }
        }
    }
    // keep the bisection strictly inside the PSD interval
    let mut a = lo;
    let mut b = hi;
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (a + b);
        if pencil.psi(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let lambda = 0.5 * (a + b);
    let s = pencil.stationary(lambda)?;
    finish(s.x, lambda, false)
}

/// Smallest-magnitude real root of `a τ² + b τ + c`.
fn smallest_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-14 * scale {
            return None;
        }
        return Some(-c / b);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    let q = -0.5 * (b + b.signum() * r);
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots.into_iter().min_by(|x, y| x.abs().total_cmp(&y.abs()))
}

/// Newton steps along `∇q` onto `q = 0` when the multiplier is active.
fn polish(q: &QuadraticFunction, mut x: Vec<f64>, eq: bool, lambda: f64) -> Vec<f64> {
    let active = eq || lambda > 0.0;
    for _ in 0..20 {
        let v = q.at(&x);
        if (!active && v >= 0.0) || v.abs() <= 1e-13 * (1.0 + norm2(&x).powi(2)) {
            break;
        }
        let g = q.gradient(&x);
        let gg = dot(&g, &g);
        if gg <= 1e-300 {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= v * gi / gg;
        }
    }
    x
}

/// A point with `q(x) > margin` (`Inequality`) or points on both sides of
/// zero (`Equality`), found by closed form or deterministic sampling.
pub fn has_slater_point(constraint: &QuadraticConstraint, seed: u64) -> bool {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let q = &constraint.q;
    let n = q.dim();
    let margin = 1e-8;
    let mut pos = q.constant() > margin;
    let mut neg = q.constant() < -margin;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for &scale in &[0.1, 1.0, 10.0, 100.0] {
        for _ in 0..2000 {
            if pos && (neg || constraint.kind == ConstraintKind::Inequality) {
                return true;
            }
            let x: Vec<f64> = (0..n).map(|_| { let v: f64 = StandardNormal.sample(&mut rng); scale * v }).collect();
            let v = q.at(&x);
            pos |= v > margin;
            neg |= v < -margin;
        }
    }
    pos && (neg || constraint.kind == ConstraintKind::Inequality)
}
