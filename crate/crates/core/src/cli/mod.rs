//! Command-line front end, kept in the library so it can be driven from tests.
//!
//! Exit codes: 0 success, 1 verification failed, 2 unreadable or malformed
//! input, 3 invalid problem, 4 numerical failure, 5 wrong output dimension.

pub mod files;
pub mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::Error;
use crate::linalg::norm2;
use crate::ops::{self, attain_atom};
use crate::quadratic::ProblemSpec;
use crate::repr::{build, spec_condition, ConditionReport, SpectrahedralShadow};
use crate::sdp::{verify_ray, Direction, SdpStatus, CERT_TOL};
use crate::verify::{check_exactness_with, sample_image, ExactnessOptions};

use files::LoadError;
use render::sig9;

pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_OUTPUT_DIM: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "quadhull", version, about = "Semidefinite representations of convex hulls of quadratic images")]
pub struct Cli {
    /// Problem file (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for `verify`.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Suppress warnings.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SenseArg {
    Max,
    Min,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the spectrahedral shadow as JSON.
    Represent,
    /// Support value in one direction.
    Support {
        #[arg(long, allow_hyphen_values = true)]
        dir: String,
        #[arg(long, value_enum, default_value = "max")]
        sense: SenseArg,
    },
    /// Support sweep over K directions of a planar image.
    Boundary {
        #[arg(long, default_value_t = 360)]
        num_dirs: usize,
        /// SVG overlay of the curve on sampled image points.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Membership of a point, with a separating hyperplane when outside.
    Member {
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Whether the relaxation condition holds.
    Conditions,
    /// Atomic measure for a moment triple.
    Decompose {
        #[arg(long)]
        moment: PathBuf,
    },
    /// Compare support values with independent oracles.
    Verify {
        #[arg(long, default_value_t = 64)]
        dirs: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Sampled image points as CSV.
    Sample {
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
}

/// Error carrying its exit code.
struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn new(code: i32, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_) | Error::DimensionMismatch { .. } => EXIT_VALIDATION,
            _ => EXIT_NUMERICAL,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Parse(m) => Failure::new(EXIT_PARSE, m),
            LoadError::Invalid(e) => e.into(),
        }
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn warn(&mut self, msg: &str) {
        if !self.cli.quiet {
            let _ = writeln!(self.err, "warning: {msg}");
        }
    }

    fn read(&self, path: &Path) -> Result<String, Failure> {
        std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
    }

    fn spec(&mut self) -> Result<ProblemSpec, Failure> {
        let path = self
            .cli
            .input
            .clone()
            .ok_or_else(|| Failure::new(EXIT_PARSE, "--input is required"))?;
        let text = self.read(&path)?;
        let mut warnings = Vec::new();
        let spec = files::parse_problem(&text, &mut |w| warnings.push(w));
        for w in warnings {
            self.warn(&w);
        }
        Ok(spec?)
    }

    /// Writes to `--out` when given, stdout otherwise.
    fn emit(&mut self, text: &str) -> Result<(), Failure> {
        match &self.cli.out {
            Some(p) => std::fs::write(p, text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", p.display()))),
            None => self
                .out
                .write_all(text.as_bytes())
                .map_err(|e| Failure::new(EXIT_PARSE, e.to_string())),
        }
    }

    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }
}

fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::new(EXIT_PARSE, format!("{what}: `{t}` is not a finite number")))
        })
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|c| sig9(*c)).collect::<Vec<_>>().join(",")
}

#[derive(Serialize)]
struct Representation<'a> {
    cone_dim: usize,
    shadow: &'a SpectrahedralShadow,
    condition: Option<ConditionReport>,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let mut ctx = Ctx { cli: &cli, out, err };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(&mut ctx)));
    match result {
        Ok(Ok(code)) => code,
        Ok(Err(f)) => {
            let _ = writeln!(ctx.err, "error: {}", f.msg);
            f.code
        }
        Err(_) => {
            let _ = writeln!(ctx.err, "error: internal failure");
            EXIT_NUMERICAL
        }
    }
}

fn dispatch(ctx: &mut Ctx) -> Result<i32, Failure> {
    match &ctx.cli.command {
        Command::Represent => represent(ctx),
        Command::Support { dir, sense } => support(ctx, dir, *sense),
        Command::Boundary { num_dirs, svg, samples } => boundary(ctx, *num_dirs, svg.clone(), *samples),
        Command::Member { point } => member(ctx, point),
        Command::Conditions => conditions(ctx),
        Command::Decompose { moment } => decompose(ctx, moment.clone()),
        Command::Verify { dirs, samples } => verify(ctx, *dirs, *samples),
        Command::Sample { count } => sample(ctx, *count),
    }
}

fn represent(ctx: &mut Ctx) -> Result<i32, Failure> {
    let spec = ctx.spec()?;
    let shadow = build(&spec)?;
    let condition = spec_condition(&spec)?;
    if let Some(c) = &condition {
        if !c.holds {
            // always shown: the output is only an outer approximation
            let _ = writeln!(
                ctx.err,
                "CONDITION FAILS (margin {}): the relaxation contains the hull but may be strictly larger",
                sig9(c.margin)
            );
        }
    }
    let rep = Representation {
        cone_dim: shadow.lift_dim(),
        shadow: &shadow,
        condition,
    };
    let mut text = serde_json::to_string_pretty(&rep).map_err(|e| Failure::new(EXIT_NUMERICAL, e.to_string()))?;
    text.push('\n');
    ctx.emit(&text)?;
    Ok(0)
}

fn support(ctx: &mut Ctx, dir: &str, sense: SenseArg) -> Result<i32, Failure> {
    let spec = ctx.spec()?;
    let ell = parse_vector(dir, "--dir")?;
    if ell.len() != spec.m() {
        return Err(Failure::new(
            EXIT_VALIDATION,
            format!("--dir has {} entries, the map has {} outputs", ell.len(), spec.m()),
        ));
    }
    let shadow = build(&spec)?;
    let sense = match sense {
        SenseArg::Max => Direction::Max,
        SenseArg::Min => Direction::Min,
    };
    let r = ops::support(&shadow, &ell, sense)?;
    ctx.say(format!("status: {}", status_name(r.status)));
    match r.status {
        SdpStatus::Optimal => {
            ctx.say(format!("value: {}", sig9(r.value)));
            if let Some(p) = &r.point {
                ctx.say(format!("point: {}", join(p)));
            }
            match attain_atom(&shadow, &r.problem, &r.solution) {
                Ok(a) => ctx.say(format!("atom: {}", join(&a.atom))),
                Err(e) => ctx.say(format!("atom: none ({e})")),
            }
        }
        SdpStatus::Unbounded => {
            ctx.say("value: unbounded");
            let verified = r.ray.as_ref().is_some_and(|d| verify_ray(&r.problem, d, CERT_TOL));
            ctx.say(format!("ray: {}", if verified { "verified" } else { "unverified" }));
        }
        SdpStatus::Infeasible => ctx.say("value: infeasible"),
        SdpStatus::NumericalTrouble => unreachable!("support maps NumericalTrouble to an error"),
    }
    Ok(0)
}

fn status_name(s: SdpStatus) -> &'static str {
    match s {
        SdpStatus::Optimal => "optimal",
        SdpStatus::Unbounded => "unbounded",
        SdpStatus::Infeasible => "infeasible",
        SdpStatus::NumericalTrouble => "numerical_trouble",
    }
}

fn boundary(ctx: &mut Ctx, k: usize, svg: Option<PathBuf>, samples: usize) -> Result<i32, Failure> {
    let spec = ctx.spec()?;
    if spec.m() != 2 {
        return Err(Failure::new(
            EXIT_OUTPUT_DIM,
            format!("boundary needs a map with 2 outputs, found {}", spec.m()),
        ));
    }
    let shadow = build(&spec)?;
    let pts = ops::boundary2d(&shadow, k)?;
    ctx.emit(&render::boundary_csv(&pts))?;
    let unbounded = pts.iter().filter(|p| p.point.is_none()).count();
    if unbounded > 0 {
        ctx.warn(&format!("{unbounded} of {k} directions are unbounded"));
    }
    if let Some(path) = svg {
        let cloud = sample_image(&spec, samples.max(1), ctx.cli.seed)?;
        std::fs::write(&path, render::boundary_svg(&pts, &cloud))
            .map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    }
    Ok(0)
}

fn member(ctx: &mut Ctx, point: &str) -> Result<i32, Failure> {
    let spec = ctx.spec()?;
    let y = parse_vector(point, "--point")?;
    if y.len() != spec.m() {
        return Err(Failure::new(
            EXIT_VALIDATION,
            format!("--point has {} entries, the map has {} outputs", y.len(), spec.m()),
        ));
    }
    let shadow = build(&spec)?;
    let r = ops::membership(&shadow, &y)?;
    if r.inside {
        ctx.say(format!("inside (distance {})", sig9(r.distance)));
    } else {
        ctx.say(format!("outside (distance {})", sig9(r.distance)));
        if let Some(s) = &r.separator {
            ctx.say(format!("separator: ell = {}, ell0 = {}", join(&s.ell), sig9(s.ell0)));
        }
    }
    Ok(0)
}

fn conditions(ctx: &mut Ctx) -> Result<i32, Failure> {
    let spec = ctx.spec()?;
    match spec_condition(&spec)? {
        None => ctx.say("condition: not needed (single constraint)"),
        Some(c) if c.holds => {
            let (a, b) = c.witness.expect("holding condition has a witness");
            ctx.say("condition: holds");
            ctx.say(format!("witness: {},{}", sig9(a), sig9(b)));
            ctx.say(format!("margin: {}", sig9(c.margin)));
        }
        Some(c) => {
            ctx.say("condition: fails");
            ctx.say(format!("margin: {}", sig9(c.margin)));
        }
    }
    Ok(0)
}

fn decompose(ctx: &mut Ctx, path: PathBuf) -> Result<i32, Failure> {
    let text = ctx.read(&path)?;
    let mut warnings = Vec::new();
    let parsed = files::parse_moment(&text, &mut |w| warnings.push(w));
    for w in warnings {
        ctx.warn(&w);
    }
    let (t, z, big_z, c) = parsed?;
    let m = ops::decompose_moment(t, &z, &big_z, &c)?;
    let mut text = serde_json::to_string_pretty(&m).map_err(|e| Failure::new(EXIT_NUMERICAL, e.to_string()))?;
    text.push('\n');
    ctx.emit(&text)?;
    Ok(0)
}

/// `k` directions: evenly spaced on the circle for two outputs, otherwise
/// the signed coordinate axes followed by seeded random unit vectors.
pub fn directions(m: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    if m == 2 {
        return (0..k)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    let mut out = Vec::with_capacity(k);
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; m];
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    while out.len() < k {
        let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm2(&v);
        if n > 1e-12 {
            out.push(v.iter().map(|c| c / n).collect());
        }
    }
    out.truncate(k);
    out
}

fn verify(ctx: &mut Ctx, k: usize, samples: usize) -> Result<i32, Failure> {
    let spec = ctx.spec()?;
    let dirs = directions(spec.m(), k, ctx.cli.seed);
    let opts = ExactnessOptions {
        seed: ctx.cli.seed,
        samples: samples.max(1),
    };
    let report = check_exactness_with(&spec, &dirs, ctx.cli.tol, opts)?;
    ctx.say(format!(
        "{:<28} {:>14} {:>14} {:>9} {:>10}  result",
        "direction", "sdp", "oracle", "oracle", "rel_gap"
    ));
    for r in &report.records {
        let kind = match r.oracle {
            crate::verify::OracleKind::Gtrs => "gtrs",
            crate::verify::OracleKind::Attained => "attained",
            crate::verify::OracleKind::Sampled => "sampled",
        };
        let dir: Vec<String> = r.ell.iter().map(|c| format!("{c:.4}")).collect();
        let mut line = format!(
            "{:<28} {:>14} {:>14} {:>9} {:>10.3e}  {}",
            dir.join(","),
            sig9(r.sdp_value),
            sig9(r.oracle_value),
            kind,
            r.rel_gap,
            if r.pass { "pass" } else { "FAIL" }
        );
        if let Some(n) = &r.note {
            line.push_str(&format!("  ({n})"));
        }
        ctx.say(line);
    }
    ctx.say(format!(
        "max relative gap {:.3e} at tolerance {:.1e}: {}",
        report.max_rel_gap,
        ctx.cli.tol,
        if report.pass { "PASS" } else { "FAIL" }
    ));
    Ok(if report.pass { 0 } else { EXIT_VERIFY_FAILED })
}

fn sample(ctx: &mut Ctx, count: usize) -> Result<i32, Failure> {
    let spec = ctx.spec()?;
    if count == 0 {
        return Err(Failure::new(EXIT_VALIDATION, "--count must be at least 1"));
    }
    let pts = sample_image(&spec, count, ctx.cli.seed)?;
    ctx.emit(&render::points_csv(&pts, spec.m()))?;
    Ok(0)
}
