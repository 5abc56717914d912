//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use quadhull::cli::files::parse_problem;
use quadhull::linalg::{max_eigenvalue, norm2, SymMatrix};
use quadhull::ops::{
    attain_atom, boundary2d, decompose_moment, inside_sweep, membership, support, AtomicMeasure,
};
use quadhull::quadratic::{ConstraintKind, ProblemSpec, QuadraticConstraint, QuadraticFunction};
use quadhull::repr::{admissible_arc, build, check_condition, homogenize_spec, spec_condition, CONDITION_TOL};
use quadhull::sdp::{
    check_solution, solve, verify_ray, Direction, SdpConstraint, SdpProblem, SdpStatus, SolverSettings, CERT_TOL,
};
use quadhull::verify::{
    grid_support, gtrs_solve, homogeneous_lift, rel_gap, sample_image, sample_pairs, sampled_support,
};

// tolerances and sizes fixed by the acceptance contract
const EXACT_REL_TOL: f64 = 1e-6;
const RANDOM_SPECS: usize = 100;
const HOMOGENEOUS_SPECS: usize = 50;
const DIRECTIONS: usize = 16;
const ATOM_TOL: f64 = 1e-6;
const BALL_SUPPORT_TOL: f64 = 1e-5;
const MEMBERSHIP_SLACK: f64 = 1e-6;
const IMAGE_SAMPLES: usize = 10_000;
const SWEEP_DIRS: usize = 360;
const GRID_RADIUS: f64 = 50.0;
const GRID_STEP: f64 = 0.01;
const RATIONAL_DIRS: usize = 64;
const RATIONAL_SUPPORT_TOL: f64 = 1e-2;
const CORRESPONDENCE_TOL: f64 = 1e-8;
const MIXTURES: usize = 100;
const RECONSTRUCT_TOL: f64 = 1e-6;
const SOLVER_INSTANCES: usize = 100;
const SOLVER_GAP: f64 = 1e-6;
const SOLVER_RESIDUAL: f64 = 1e-7;
const CONDITION_PAIRS: usize = 100;
const CONDITION_GRID: usize = 3600;

type Outcome = Result<String, String>;

fn example(name: &str) -> ProblemSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    parse_problem(&text, &mut |_| {}).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SymMatrix {
    let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(lo..hi)).collect();
    SymMatrix::from_row_major(n, &raw).unwrap()
}

fn random_function(rng: &mut ChaCha8Rng, n: usize) -> QuadraticFunction {
    QuadraticFunction::new(
        rng.random_range(-5.0..5.0),
        (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
        random_sym(rng, n, -5.0, 5.0),
    )
    .unwrap()
}

fn random_form(rng: &mut ChaCha8Rng, n: usize) -> QuadraticFunction {
    QuadraticFunction::form(random_sym(rng, n, -5.0, 5.0))
}

fn unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm2(&v);
        if n > 1e-9 {
            return v.iter().map(|c| c / n).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// SDP support against the exact one-constraint oracle on random ball or
/// sphere specs.
fn single_constraint_exactness(kind: ConstraintKind, seed: u64) -> Outcome {
    let results: Vec<Result<f64, String>> = (0..RANDOM_SPECS)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + i as u64);
            let n = rng.random_range(1..=4);
            let m = rng.random_range(1..=3);
            let r = rng.random_range(0.5..2.0);
            let fs: Vec<QuadraticFunction> = (0..m).map(|_| random_function(&mut rng, n)).collect();
            let c = QuadraticConstraint::new(QuadraticFunction::ball(n, r), kind);
            let spec = ProblemSpec::single_constraint(fs.clone(), c.clone()).map_err(|e| e.to_string())?;
            let shadow = build(&spec).map_err(|e| e.to_string())?;
            let mut worst: f64 = 0.0;
            for _ in 0..DIRECTIONS {
                let ell = unit(&mut rng, m);
                let s = support(&shadow, &ell, Direction::Max).map_err(|e| format!("spec {i}: {e}"))?;
                let f = QuadraticFunction::combination(n, &ell, &fs).unwrap();
                let g = gtrs_solve(&f, &c, Direction::Max).map_err(|e| format!("spec {i}: {e}"))?;
                let gap = rel_gap(s.value, g.value);
                if !(gap <= EXACT_REL_TOL) {
                    return Err(format!("spec {i} (n={n}, m={m}): sdp {} vs oracle {} (gap {gap:e})", s.value, g.value));
                }
                worst = worst.max(gap);
            }
            Ok(worst)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(format!(
        "{RANDOM_SPECS} specs x {DIRECTIONS} directions, max rel gap {worst:.2e} <= {EXACT_REL_TOL:e}"
    ))
}

/// Rank-one certificates for random two-constraint forms with `B₂ = −I`.
fn homogeneous_attainment() -> Outcome {
    let results: Vec<Result<(f64, f64), String>> = (0..HOMOGENEOUS_SPECS)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(3000 + i as u64);
            let n = rng.random_range(2..=4);
            let m = rng.random_range(1..=3);
            let eq = rng.random_bool(0.5);
            // x = 0 always lies in T, so T is never empty
            let h1 = QuadraticFunction::new(
                if eq { 0.0 } else { rng.random_range(0.0..1.0) },
                vec![0.0; n],
                random_sym(&mut rng, n, -5.0, 5.0),
            )
            .unwrap();
            let c1 = QuadraticConstraint::new(h1, if eq { ConstraintKind::Equality } else { ConstraintKind::Inequality });
            let c2 = QuadraticConstraint::inequality(QuadraticFunction::ball(n, rng.random_range(0.5..2.0)));
            let fs: Vec<QuadraticFunction> = (0..m).map(|_| random_form(&mut rng, n)).collect();
            let spec = ProblemSpec::two_homogeneous(fs, [c1, c2]).map_err(|e| e.to_string())?;
            let cond = spec_condition(&spec).unwrap().unwrap();
            if !cond.holds {
                return Err(format!("spec {i}: condition should hold with witness (0, 1)"));
            }
            let shadow = build(&spec).unwrap();
            let (mut feas, mut gap): (f64, f64) = (0.0, 0.0);
            for d in 0..DIRECTIONS {
                let ell = unit(&mut rng, m);
                let s = support(&shadow, &ell, Direction::Max).map_err(|e| format!("spec {i}: {e}"))?;
                if s.status != SdpStatus::Optimal {
                    return Err(format!("spec {i} dir {d}: status {:?}", s.status));
                }
                let a = attain_atom(&shadow, &s.problem, &s.solution)
                    .map_err(|e| format!("spec {i} dir {d}: no rank-one optimizer: {e}"))?;
                let v = spec.constraints().iter().map(|c| c.violation(&a.atom)).fold(0.0, f64::max);
                let image = spec.image(&a.atom).unwrap();
                let g = (dot(&image, &ell) - s.value).abs() / (1.0 + s.value.abs());
                if v > ATOM_TOL || g > ATOM_TOL {
                    return Err(format!("spec {i} dir {d}: violation {v:e}, value gap {g:e}"));
                }
                feas = feas.max(v);
                gap = gap.max(g);
            }
            Ok((feas, gap))
        })
        .collect();
    let (mut feas, mut gap): (f64, f64) = (0.0, 0.0);
    for r in results {
        let (a, b) = r?;
        feas = feas.max(a);
        gap = gap.max(b);
    }
    Ok(format!(
        "{HOMOGENEOUS_SPECS} specs x {DIRECTIONS} directions reach rank 1; max violation {feas:.1e}, max value gap {gap:.1e}"
    ))
}

/// Every sampled image point lies inside the sweep polygon and the SDP hull.
fn contains_samples(spec: &ProblemSpec, samples: &[Vec<f64>]) -> Result<(usize, f64), String> {
    let shadow = build(spec).map_err(|e| e.to_string())?;
    let sweep = boundary2d(&shadow, SWEEP_DIRS).map_err(|e| e.to_string())?;
    if sweep.iter().any(|b| !b.support.is_finite()) {
        return Err("sweep has unbounded directions".into());
    }
    let outside_sweep = samples
        .iter()
        .filter(|y| !inside_sweep(&sweep, [y[0], y[1]], MEMBERSHIP_SLACK * (1.0 + norm2(y))))
        .count();
    if outside_sweep > 0 {
        return Err(format!("{outside_sweep} samples fall outside the {SWEEP_DIRS}-direction boundary"));
    }
    let dists: Vec<Result<f64, String>> = samples
        .par_iter()
        .map(|y| {
            let r = membership(&shadow, y).map_err(|e| format!("membership at {y:?}: {e}"))?;
            if r.inside {
                Ok(r.distance)
            } else {
                Err(format!("sample {y:?} reported outside at distance {:e}", r.distance))
            }
        })
        .collect();
    let mut worst: f64 = 0.0;
    for d in dists {
        worst = worst.max(d?);
    }
    Ok((samples.len(), worst))
}

fn ball_image() -> Outcome {
    let spec = example("ball_linear_bilinear.json");
    let samples = sample_image(&spec, IMAGE_SAMPLES, 11).map_err(|e| e.to_string())?;
    if !sample_pairs(&spec, 200, 11)
        .unwrap()
        .iter()
        .all(|(x, _)| norm2(x) <= 1.0 + 1e-12)
    {
        return Err("a parameter sample left the unit ball".into());
    }
    let (count, worst) = contains_samples(&spec, &samples)?;
    let shadow = build(&spec).unwrap();
    let s = support(&shadow, &[1.0, 0.0], Direction::Max).map_err(|e| e.to_string())?;
    let err = (s.value - 29f64.sqrt()).abs();
    if err > BALL_SUPPORT_TOL {
        return Err(format!("support (1,0) = {} differs from sqrt(29) by {err:e}", s.value));
    }
    Ok(format!(
        "{count} samples inside (max distance {worst:.1e}); support (1,0) = {:.9}, |err| {err:.1e}",
        s.value
    ))
}

fn cone_image() -> Outcome {
    let spec = example("cone_in_ball.json");
    let c = spec_condition(&spec).unwrap().unwrap();
    let (m1, m2) = c.witness.ok_or("condition does not hold")?;
    let cs = spec.constraints();
    let mut m = cs[0].q.quad().scaled(m1);
    m.axpy(m2, cs[1].q.quad());
    let top = max_eigenvalue(&m).unwrap();
    // witness must be admissible: free weight on the equality, nonnegative on the inequality
    if !(c.holds && top < 0.0 && m2 >= 0.0) {
        return Err(format!("witness ({m1}, {m2}) gives lambda_max {top}"));
    }
    let pairs = sample_pairs(&spec, IMAGE_SAMPLES, 12).map_err(|e| e.to_string())?;
    let cone = &cs[0].q;
    let worst_res = pairs.iter().map(|(x, _)| cone.evaluate(x).unwrap().abs()).fold(0.0, f64::max);
    if worst_res > 1e-10 || pairs.iter().any(|(x, _)| dot(x, x) > 1.0 + 1e-9) {
        return Err(format!("parameter samples off the set (cone residual {worst_res:e})"));
    }
    let samples: Vec<Vec<f64>> = pairs.into_iter().map(|(_, y)| y).collect();
    let (count, worst) = contains_samples(&spec, &samples)?;
    Ok(format!(
        "condition holds, witness ({m1:.3}, {m2:.3}) with lambda_max {top:.3}; {count} samples inside (max distance {worst:.1e})"
    ))
}

fn hyperbolic_counterexample() -> Outcome {
    let spec = example("hyperbolic_unbounded.json");
    let c = spec_condition(&spec).unwrap().unwrap();
    if c.holds {
        return Err("condition reported as holding".into());
    }
    let shadow = build(&spec).unwrap();
    let s = support(&shadow, &[1.0, 1.0], Direction::Max).map_err(|e| e.to_string())?;
    let ray = s.ray.as_ref().ok_or("no ray")?;
    if s.status != SdpStatus::Unbounded || !verify_ray(&s.problem, ray, CERT_TOL) {
        return Err(format!("status {:?}, ray verified: false", s.status));
    }
    let bound = grid_support(&spec, &[1.0, 1.0], GRID_RADIUS, GRID_STEP).map_err(|e| e.to_string())?;
    if !bound.is_finite() {
        return Err("grid bound is not finite".into());
    }
    Ok(format!(
        "condition fails (margin {:.3}); support (1,1) unbounded with verified ray; grid bound {bound:.6}",
        c.margin
    ))
}

fn rational_image() -> Outcome {
    let spec = example("rational_ball.json");
    let h = homogenize_spec(&spec).unwrap();
    let pairs = sample_pairs(&spec, IMAGE_SAMPLES, 13).map_err(|e| e.to_string())?;
    // each U point is the P point of the lifted parameter
    let mut corr: f64 = 0.0;
    for (x, y) in &pairs {
        let xh = homogeneous_lift(&spec, x).ok_or("denominator vanished")?;
        if !h.contains_param(&xh, 1e-10) {
            return Err(format!("lifted point {xh:?} is not in the homogenized set"));
        }
        let p = h.image(&xh).unwrap();
        corr = corr.max(p.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    if corr > CORRESPONDENCE_TOL {
        return Err(format!("correspondence error {corr:e}"));
    }
    let samples: Vec<Vec<f64>> = pairs.into_iter().map(|(_, y)| y).collect();
    let (count, worst) = contains_samples(&spec, &samples)?;
    let shadow = build(&spec).unwrap();
    let mut gap: f64 = 0.0;
    for j in 0..RATIONAL_DIRS {
        let t = 2.0 * std::f64::consts::PI * j as f64 / RATIONAL_DIRS as f64;
        let ell = [t.cos(), t.sin()];
        let s = support(&shadow, &ell, Direction::Max).map_err(|e| e.to_string())?;
        let inner = sampled_support(&samples, &ell);
        if inner > s.value + 1e-7 * (1.0 + s.value.abs()) {
            return Err(format!("direction {j}: sampled {inner} exceeds support {}", s.value));
        }
        gap = gap.max(s.value - inner);
    }
    if gap > RATIONAL_SUPPORT_TOL {
        return Err(format!("support exceeds sampled support by {gap:e}"));
    }
    Ok(format!(
        "correspondence {corr:.1e}; {count} samples inside (max distance {worst:.1e}); {RATIONAL_DIRS} directions, support - sampled <= {gap:.2e}"
    ))
}

fn moment_decomposition() -> Outcome {
    let results: Vec<Result<(f64, f64), String>> = (0..MIXTURES)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + i as u64);
            let n = rng.random_range(1..=4);
            let k = rng.random_range(1..=4);
            let sphere = rng.random_bool(0.5);
            let r = rng.random_range(0.5..2.0);
            let atoms: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    let u = unit(&mut rng, n);
                    let rad = if sphere { r } else { r * rng.random_range(0.0f64..1.0).powf(1.0 / n as f64) };
                    u.iter().map(|c| c * rad).collect()
                })
                .collect();
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let mm = AtomicMeasure { atoms, weights }.moment_matrix(n);
            let z: Vec<f64> = (1..=n).map(|j| mm.get(0, j)).collect();
            let big_z = mm.block(1, n);
            let c = QuadraticConstraint::new(
                QuadraticFunction::ball(n, r),
                if sphere { ConstraintKind::Equality } else { ConstraintKind::Inequality },
            );
            let got = decompose_moment(mm.get(0, 0), &z, &big_z, &c).map_err(|e| format!("mixture {i}: {e}"))?;
            let err = got.moment_matrix(n).sub(&mm).frobenius_norm();
            let bound = RECONSTRUCT_TOL * (1.0 + big_z.frobenius_norm());
            let v = got.atoms.iter().map(|u| c.violation(u)).fold(0.0, f64::max);
            if err > bound || v > ATOM_TOL || got.weights.iter().any(|w| *w < 0.0) {
                return Err(format!("mixture {i}: reconstruction {err:e}, violation {v:e}"));
            }
            Ok((err / (1.0 + big_z.frobenius_norm()), v))
        })
        .collect();
    let (mut err, mut v): (f64, f64) = (0.0, 0.0);
    for r in results {
        let (a, b) = r?;
        err = err.max(a);
        v = v.max(b);
    }
    Ok(format!(
        "{MIXTURES} mixtures; max scaled reconstruction error {err:.1e}, max atom violation {v:.1e}"
    ))
}

fn solver_health() -> Outcome {
    let mut worst_gap: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for i in 0..SOLVER_INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + i as u64);
        let n = rng.random_range(2..=6);
        let k = rng.random_range(1..=n * (n + 1) / 2);
        // planted strictly feasible X₀ = GGᵀ + I
        let g: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x0 = SymMatrix::identity(n).expand(&g, n);
        x0.axpy(1.0, &SymMatrix::identity(n));
        let rows: Vec<SdpConstraint> = (0..k)
            .map(|_| {
                let a = random_sym(&mut rng, n, -1.0, 1.0);
                let b = a.dot(&x0);
                if rng.random_bool(0.5) {
                    SdpConstraint::eq(a, b)
                } else {
                    SdpConstraint::geq(a, b - rng.random_range(0.1..1.0))
                }
            })
            .collect();
        // a positive definite cost keeps the minimum finite
        let h: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut c = SymMatrix::identity(n).expand(&h, n);
        c.axpy(0.5, &SymMatrix::identity(n));
        let (obj, dir) = if rng.random_bool(0.5) { (c, Direction::Min) } else { (c.scaled(-1.0), Direction::Max) };
        let p = SdpProblem::new(obj, rows, dir).unwrap();
        let sol = solve(&p, SolverSettings::default());
        if sol.status != SdpStatus::Optimal {
            return Err(format!("instance {i}: status {:?}", sol.status));
        }
        let chk = check_solution(&p, &sol).unwrap();
        let gap = (sol.primal_obj - sol.dual_obj).abs() / (1.0 + sol.primal_obj.abs());
        let res = chk.primal_residual.max(chk.dual_residual);
        if gap > SOLVER_GAP || !chk.passes(&sol.x, &sol.s, SOLVER_RESIDUAL, SOLVER_GAP) {
            return Err(format!("instance {i}: gap {gap:e}, residual {res:e}, {chk:?}"));
        }
        worst_gap = worst_gap.max(gap);
        worst_res = worst_res.max(res);
    }
    let spec = example("hyperbolic_unbounded.json");
    let (p, _) = build(&spec).unwrap().support_problem(&[1.0, 1.0], Direction::Max).unwrap();
    let sol = solve(&p, SolverSettings::default());
    let certified = sol.status == SdpStatus::Unbounded && sol.ray.as_ref().is_some_and(|d| verify_ray(&p, d, CERT_TOL));
    if !certified {
        return Err(format!("unbounded instance: status {:?}, ray not certified", sol.status));
    }
    Ok(format!(
        "{SOLVER_INSTANCES} planted instances optimal (max gap {worst_gap:.1e}, max residual {worst_res:.1e}); unbounded instance certified"
    ))
}

fn condition_vs_grid() -> Outcome {
    use ConstraintKind::*;
    let kinds = [(Inequality, Inequality), (Equality, Inequality), (Inequality, Equality), (Equality, Equality)];
    let mut holds = 0;
    let mut total = 0;
    for i in 0..CONDITION_PAIRS {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + i as u64);
        let n = rng.random_range(2..=4);
        let mut b1 = random_sym(&mut rng, n, -1.0, 1.0);
        let mut b2 = random_sym(&mut rng, n, -1.0, 1.0);
        // shift some pairs toward definiteness so both verdicts occur
        b1.axpy(rng.random_range(-2.0..2.0), &SymMatrix::identity(n));
        b2.axpy(rng.random_range(-2.0..2.0), &SymMatrix::identity(n));
        let scale = 1.0 + b1.frobenius_norm().max(b2.frobenius_norm());
        for kind in kinds {
            let r = check_condition(&b1, &b2, kind, CONDITION_TOL).unwrap();
            let (lo, hi) = admissible_arc(kind);
            let scan = (0..=CONDITION_GRID).any(|j| {
                let t = lo + (hi - lo) * j as f64 / CONDITION_GRID as f64;
                let mut m = b1.scaled(t.cos());
                m.axpy(t.sin(), &b2);
                max_eigenvalue(&m).unwrap() < -CONDITION_TOL * scale
            });
            if scan != r.holds {
                return Err(format!(
                    "pair {i} kinds {kind:?}: checker {} vs grid {scan} (margin {:e})",
                    r.holds, r.margin
                ));
            }
            holds += usize::from(scan);
            total += 1;
        }
    }
    Ok(format!("{total} verdicts agree with the {CONDITION_GRID}-point scan ({holds} hold)"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("single-constraint exactness, ball", || single_constraint_exactness(ConstraintKind::Inequality, 1000)),
        ("single-constraint exactness, sphere", || single_constraint_exactness(ConstraintKind::Equality, 2000)),
        ("two-form attainment certificates", homogeneous_attainment),
        ("ball image hull and support", ball_image),
        ("cone-in-ball image hull", cone_image),
        ("hyperbolic counterexample", hyperbolic_counterexample),
        ("rational image via homogenization", rational_image),
        ("moment decomposition", moment_decomposition),
        ("sdp solver health", solver_health),
        ("condition checker vs grid", condition_vs_grid),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
