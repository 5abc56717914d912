use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid problem: {0}")]
    Validation(String),

    #[error("eigendecomposition did not converge (off-diagonal residual {residual:e})")]
    EigenNonConvergence { residual: f64 },

    #[error("numerical trouble: {0}")]
    NumericalTrouble(String),

    #[error("matrix has numerical rank {rank}, expected 1")]
    NotRankOne { rank: usize },

    #[error("rank-one factor has a vanishing corner entry ({corner:e}); no finite atom")]
    NoFiniteAtom { corner: f64 },

    #[error("moment decomposition stalled with residual {residual:e} after {atoms} atoms")]
    Decomposition {
        residual: f64,
        atoms: usize,
        /// Row-major residual moment matrix left over when peeling stopped.
        remainder: Vec<Vec<f64>>,
    },

    #[error("trust-region oracle failed: {0}")]
    Oracle(String),

    #[error("sampling failed: {0}")]
    Sampling(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
