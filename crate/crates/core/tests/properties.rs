use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use quadhull::cli::render::sig9;
use quadhull::linalg::{norm2, SymMatrix};
use quadhull::ops::{membership, support};
use quadhull::quadratic::{ConstraintKind, ProblemSpec, QuadraticConstraint, QuadraticFunction};
use quadhull::repr::{build, embed_equality_form, embed_point, spec_condition};
use quadhull::sdp::{check_solution, solve, Direction, SdpConstraint, SdpProblem, SdpStatus, SolverSettings};
use quadhull::verify::{gtrs_solve, sample_image, sample_params, sampled_support};

fn sym(rng: &mut ChaCha8Rng, n: usize, s: f64) -> SymMatrix {
    let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(-s..s)).collect();
    SymMatrix::from_row_major(n, &raw).unwrap()
}

fn function(rng: &mut ChaCha8Rng, n: usize) -> QuadraticFunction {
    QuadraticFunction::new(
        rng.random_range(-5.0..5.0),
        (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
        sym(rng, n, 5.0),
    )
    .unwrap()
}

fn unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = norm2(&v).max(1e-12);
    v.iter().map(|c| c / n).collect()
}

fn ball_spec(rng: &mut ChaCha8Rng, kind: ConstraintKind) -> ProblemSpec {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=3);
    let fs = (0..m).map(|_| function(rng, n)).collect();
    ProblemSpec::single_constraint(fs, QuadraticConstraint::new(QuadraticFunction::ball(n, 1.0), kind)).unwrap()
}

fn form_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let n = rng.random_range(2..=4);
    let m = rng.random_range(1..=3);
    let fs = (0..m).map(|_| QuadraticFunction::form(sym(rng, n, 5.0))).collect();
    let h1 = QuadraticFunction::form(sym(rng, n, 2.0));
    ProblemSpec::two_homogeneous(
        fs,
        [
            QuadraticConstraint::equality(h1),
            QuadraticConstraint::inequality(QuadraticFunction::ball(n, 1.0)),
        ],
    )
    .unwrap()
}

fn rational_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let n = rng.random_range(1..=3);
    let m = rng.random_range(1..=3);
    let fs = (0..m).map(|_| function(rng, n)).collect();
    let f0 = QuadraticFunction::new(1.0 + rng.random_range(0.0..1.0), vec![0.0; n], SymMatrix::identity(n)).unwrap();
    ProblemSpec::rational(fs, f0, QuadraticConstraint::inequality(QuadraticFunction::ball(n, 1.0))).unwrap()
}

fn all_shapes(seed: u64) -> Vec<ProblemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        ball_spec(&mut rng, ConstraintKind::Inequality),
        ball_spec(&mut rng, ConstraintKind::Equality),
        form_spec(&mut rng),
        rational_spec(&mut rng),
    ]
}

proptest! {
    #[test]
    fn homogenization_scales_quadratically(
        seed in any::<u64>(),
        t in 0.01f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6);
        let f = function(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut xh = vec![t];
        xh.extend(x.iter().map(|c| c * t));
        let lhs = f.homogenize().evaluate(&xh).unwrap();
        let rhs = t * t * f.evaluate(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn nine_digit_output_round_trips(v in -1e12f64..1e12) {
        let s = sig9(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-9 * v.abs().max(1e-300));
    }
}

#[test]
fn lifted_points_reproduce_images() {
    for seed in 0..8 {
        for spec in all_shapes(seed) {
            let shadow = build(&spec).unwrap();
            let xs = sample_params(&spec, 100, seed).unwrap();
            for x in xs {
                let lift = shadow.lift_point(&x, spec.denominator()).unwrap();
                assert!(shadow.violation(&lift) <= 1e-10 * (1.0 + lift.frobenius_norm()));
                let y = shadow.output(&lift);
                let direct = spec.image(&x).unwrap();
                for (a, b) in y.iter().zip(&direct) {
                    assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn support_bounds_every_sample() {
    for seed in 0..3 {
        for spec in all_shapes(100 + seed) {
            let shadow = build(&spec).unwrap();
            let images = sample_image(&spec, 10_000, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let ell = unit(&mut rng, spec.m());
                let s = support(&shadow, &ell, Direction::Max).unwrap();
                let inner = sampled_support(&images, &ell);
                assert!(s.value >= inner - 1e-7 * (1.0 + inner.abs()), "{} < {inner}", s.value);
            }
        }
    }
}

#[test]
fn separators_hold_against_fresh_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut outside = 0;
    for spec in all_shapes(5).into_iter().chain(all_shapes(6)) {
        let shadow = build(&spec).unwrap();
        for _ in 0..10 {
            let y: Vec<f64> = (0..spec.m()).map(|_| rng.random_range(-40.0..40.0)).collect();
            let r = membership(&shadow, &y).unwrap();
            if r.inside {
                continue;
            }
            outside += 1;
            let sep = r.separator.expect("outside verdicts carry a separator");
            let fresh = support(&shadow, &sep.ell, Direction::Min).unwrap();
            assert_eq!(fresh.status, SdpStatus::Optimal);
            assert!(fresh.value >= sep.ell0 - 1e-7 * (1.0 + sep.ell0.abs()));
            let at: f64 = sep.ell.iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!(at < sep.ell0);
        }
    }
    assert!(outside > 20, "only {outside} outside points exercised");
}

fn planted(rng: &mut ChaCha8Rng) -> SdpProblem {
    let n = rng.random_range(1..=8);
    let k = rng.random_range(1..=6);
    let g: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut x0 = SymMatrix::identity(n).expand(&g, n);
    x0.axpy(0.5, &SymMatrix::identity(n));
    let rows = (0..k)
        .map(|_| {
            let a = sym(rng, n, 1.0);
            let b = a.dot(&x0);
            if rng.random_bool(0.5) {
                SdpConstraint::eq(a, b)
            } else {
                SdpConstraint::geq(a, b - rng.random_range(0.0..1.0))
            }
        })
        .collect();
    let h: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut c = SymMatrix::identity(n).expand(&h, n);
    c.axpy(0.1, &SymMatrix::identity(n));
    SdpProblem::new(c, rows, Direction::Min).unwrap()
}

#[test]
fn planted_instances_satisfy_weak_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..100 {
        let p = planted(&mut rng);
        let sol = solve(&p, SolverSettings::default());
        assert_eq!(sol.status, SdpStatus::Optimal, "instance {i}");
        let scale = 1.0 + sol.primal_obj.abs() + sol.dual_obj.abs();
        assert!(sol.dual_obj <= sol.primal_obj + 1e-9 * scale, "instance {i}");
        let chk = check_solution(&p, &sol).unwrap();
        assert!(chk.passes(&sol.x, &sol.s, 1e-7, 1e-6), "instance {i}: {chk:?}");
    }
}

#[test]
fn slack_embedding_keeps_optimal_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 50 {
        let p = planted(&mut rng);
        let Ok(e) = embed_equality_form(&p) else { continue };
        let a = solve(&p, SolverSettings::default());
        let b = solve(&e, SolverSettings::default());
        assert_eq!(a.status, SdpStatus::Optimal);
        assert_eq!(b.status, SdpStatus::Optimal);
        assert!((a.primal_obj - b.primal_obj).abs() <= 1e-6 * (1.0 + a.primal_obj.abs()));
        let lifted = embed_point(&p, &a.x);
        assert!(e.max_violation(&lifted) <= 1e-7 * (1.0 + lifted.frobenius_norm()));
        checked += 1;
    }
}

/// Rejection samples of the ball `‖x‖ ≤ r` drawn from the bounding cube.
fn cube_rejection(rng: &mut ChaCha8Rng, n: usize, r: f64, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-r..r)).collect();
        if norm2(&x) <= r {
            out.push(x);
        }
    }
    out
}

#[test]
fn gtrs_dominates_rejection_samples_and_meets_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for i in 0..200 {
        let n = rng.random_range(1..=3);
        let r = rng.random_range(0.5..2.0);
        let f = function(&mut rng, n);
        let c = QuadraticConstraint::inequality(QuadraticFunction::ball(n, r));
        for sense in [Direction::Max, Direction::Min] {
            let g = gtrs_solve(&f, &c, sense).unwrap();
            let x = g.argmin.as_ref().unwrap();
            let fx = f.evaluate(x).unwrap();
            let scale = 1.0 + fx.abs();
            assert!((fx - g.value).abs() <= 1e-8 * scale);
            assert!(c.violation(x) <= 1e-8);
            assert!(g.stationarity <= 1e-6, "pair {i}: stationarity {:e}", g.stationarity);
            assert!(g.multiplier >= 0.0);
            let q = c.q.evaluate(x).unwrap();
            assert!(g.multiplier * q <= 1e-6 * (1.0 + g.multiplier));
        }
        let best = cube_rejection(&mut rng, n, r, 100_000)
            .iter()
            .map(|x| f.evaluate(x).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let g = gtrs_solve(&f, &c, Direction::Max).unwrap();
        assert!(g.value >= best - 1e-3, "pair {i}: {} < {best}", g.value);
        assert!(g.value - best <= 0.5 * (1.0 + best.abs()), "pair {i}: oracle far above samples");
    }
}

#[test]
fn sphere_maximum_never_beats_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let f = function(&mut rng, n);
        let q = QuadraticFunction::ball(n, rng.random_range(0.5..2.0));
        let s = gtrs_solve(&f, &QuadraticConstraint::equality(q.clone()), Direction::Max).unwrap();
        let b = gtrs_solve(&f, &QuadraticConstraint::inequality(q), Direction::Max).unwrap();
        assert!(s.value <= b.value + 1e-9 * (1.0 + b.value.abs()));
    }
}

#[test]
fn samples_are_bit_stable() {
    for spec in all_shapes(9) {
        let a = sample_image(&spec, 700, 42).unwrap();
        let b = sample_image(&spec, 700, 42).unwrap();
        let bits = |v: &Vec<Vec<f64>>| v.iter().flatten().map(|c| c.to_bits()).collect::<Vec<u64>>();
        assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn random_form_specs_with_ball_satisfy_condition() {
    for seed in 0..20 {
        let spec = form_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        assert!(spec_condition(&spec).unwrap().unwrap().holds);
    }
}
