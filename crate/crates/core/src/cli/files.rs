//! JSON problem and moment files.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::SymMatrix;
use crate::quadratic::{ConstraintKind, ProblemSpec, QuadraticConstraint, QuadraticFunction, SpecKind};

/// Asymmetry above this is reported when `F` is symmetrized on load.
pub const ASYMMETRY_WARN: f64 = 1e-9;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FunctionFile {
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(rename = "F", default)]
    pub f: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum KindFile {
    Ineq,
    Eq,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFile {
    pub q: FunctionFile,
    pub kind: KindFile,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SpecKindFile {
    SingleConstraint,
    TwoHomogeneous,
    Rational,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: SpecKindFile,
    pub n: usize,
    pub functions: Vec<FunctionFile>,
    pub constraints: Vec<ConstraintFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<FunctionFile>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MomentFile {
    pub t: f64,
    pub z: Vec<f64>,
    #[serde(rename = "Z")]
    pub big_z: Vec<Vec<f64>>,
    pub constraint: ConstraintFile,
}

/// Failure to read a file, split the way the exit codes are.
#[derive(Debug)]
pub enum LoadError {
    /// Malformed JSON or wrong field types, with the field path.
    Parse(String),
    /// Well-formed data that is not a valid problem.
    Invalid(Error),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Parse(m) => write!(f, "parse error: {m}"),
            LoadError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        LoadError::Parse(format!("line {} column {}, at `{path}`: {inner}", inner.line(), inner.column()))
    })
}

impl FunctionFile {
    /// Converts with `n` variables; `warn` receives symmetrization notices.
    pub fn to_function(&self, n: usize, what: &str, warn: &mut dyn FnMut(String)) -> Result<QuadraticFunction, Error> {
        let b = self.b.clone().unwrap_or_else(|| vec![0.0; n]);
        if b.len() != n {
            return Err(Error::validation(format!("{what}: b has length {}, expected {n}", b.len())));
        }
        let f = match &self.f {
            None => SymMatrix::zeros(n),
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::validation(format!("{what}: F must be {n}×{n}")));
                }
                let asym = SymMatrix::asymmetry(rows);
                if asym > ASYMMETRY_WARN {
                    warn(format!("{what}: F is asymmetric by {asym:e}; using (F + Fᵀ)/2"));
                }
                SymMatrix::from_rows(rows)?
            }
        };
        if !self.a.is_finite() || b.iter().any(|v| !v.is_finite()) || f.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("{what}: coefficients must be finite")));
        }
        QuadraticFunction::new(self.a, b, f)
    }

    pub fn from_function(f: &QuadraticFunction) -> Self {
        FunctionFile {
            a: f.constant(),
            b: Some(f.linear().to_vec()),
            f: Some(f.quad().to_rows()),
        }
    }
}

impl ConstraintFile {
    pub fn to_constraint(&self, n: usize, what: &str, warn: &mut dyn FnMut(String)) -> Result<QuadraticConstraint, Error> {
        let q = self.q.to_function(n, what, warn)?;
        Ok(QuadraticConstraint::new(
            q,
            match self.kind {
                KindFile::Ineq => ConstraintKind::Inequality,
                KindFile::Eq => ConstraintKind::Equality,
            },
        ))
    }

    pub fn from_constraint(c: &QuadraticConstraint) -> Self {
        ConstraintFile {
            q: FunctionFile::from_function(&c.q),
            kind: match c.kind {
                ConstraintKind::Inequality => KindFile::Ineq,
                ConstraintKind::Equality => KindFile::Eq,
            },
        }
    }
}

impl ProblemFile {
    pub fn to_spec(&self, warn: &mut dyn FnMut(String)) -> Result<ProblemSpec, Error> {
        let n = self.n;
        let functions = self
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| f.to_function(n, &format!("functions[{i}]"), warn))
            .collect::<Result<Vec<_>, _>>()?;
        let constraints = self
            .constraints
            .iter()
            .enumerate()
            .map(|(j, c)| c.to_constraint(n, &format!("constraints[{j}]"), warn))
            .collect::<Result<Vec<_>, _>>()?;
        let denominator = self
            .denominator
            .as_ref()
            .map(|d| d.to_function(n, "denominator", warn))
            .transpose()?;
        let kind = match self.kind {
            SpecKindFile::SingleConstraint => SpecKind::SingleConstraint,
            SpecKindFile::TwoHomogeneous => SpecKind::TwoHomogeneous,
            SpecKindFile::Rational => SpecKind::Rational,
        };
        ProblemSpec::new(kind, n, functions, constraints, denominator)
    }

    pub fn from_spec(spec: &ProblemSpec) -> Self {
        ProblemFile {
            kind: match spec.kind() {
                SpecKind::SingleConstraint => SpecKindFile::SingleConstraint,
                SpecKind::TwoHomogeneous => SpecKindFile::TwoHomogeneous,
                SpecKind::Rational => SpecKindFile::Rational,
            },
            n: spec.n(),
            functions: spec.functions().iter().map(FunctionFile::from_function).collect(),
            constraints: spec.constraints().iter().map(ConstraintFile::from_constraint).collect(),
            denominator: spec.denominator().map(FunctionFile::from_function),
        }
    }
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str, warn: &mut dyn FnMut(String)) -> Result<ProblemSpec, LoadError> {
    let file: ProblemFile = parse(text)?;
    file.to_spec(warn).map_err(LoadError::Invalid)
}

/// Parses a moment triple and its constraint.
pub fn parse_moment(
    text: &str,
    warn: &mut dyn FnMut(String),
) -> Result<(f64, Vec<f64>, SymMatrix, QuadraticConstraint), LoadError> {
    let file: MomentFile = parse(text)?;
    let n = file.z.len();
    let rows = &file.big_z;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(LoadError::Invalid(Error::validation(format!("Z must be {n}×{n} to match z"))));
    }
    let asym = SymMatrix::asymmetry(rows);
    if asym > ASYMMETRY_WARN {
        warn(format!("Z is asymmetric by {asym:e}; using (Z + Zᵀ)/2"));
    }
    let z_mat = SymMatrix::from_rows(rows).map_err(LoadError::Invalid)?;
    let c = file
        .constraint
        .to_constraint(n, "constraint", warn)
        .map_err(LoadError::Invalid)?;
    Ok((file.t, file.z, z_mat, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BALL: &str = r#"{
        "kind": "single_constraint", "n": 2,
        "functions": [{"a": 0, "b": [1, 0], "F": [[0, 0], [0, 0]]}],
        "constraints": [{"q": {"a": 1, "b": [0, 0], "F": [[-1, 0], [0, -1]]}, "kind": "ineq"}]
    }"#;

    #[test]
    fn round_trip() {
        let spec = parse_problem(BALL, &mut |_| {}).unwrap();
        assert_eq!(spec.n(), 2);
        let back = ProblemFile::from_spec(&spec).to_spec(&mut |_| {}).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let bad = BALL.replace("\"ineq\"", "\"sometimes\"");
        match parse_problem(&bad, &mut |_| {}) {
            Err(LoadError::Parse(m)) => assert!(m.contains("constraints[0].kind"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn asymmetric_input_warns() {
        let text = BALL.replace("[[0, 0], [0, 0]]", "[[0, 1], [0, 0]]");
        let mut warnings = Vec::new();
        let spec = parse_problem(&text, &mut |w| warnings.push(w)).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(spec.functions()[0].quad().get(0, 1), 0.5);
    }

    #[test]
    fn validation_errors_are_separate() {
        let text = BALL.replace("\"b\": [1, 0]", "\"b\": [1, 0, 3]");
        assert!(matches!(parse_problem(&text, &mut |_| {}), Err(LoadError::Invalid(_))));
    }
}
