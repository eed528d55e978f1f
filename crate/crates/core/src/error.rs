use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),

    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: u32, right: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown monomial order `{0}` (expected `lex` or `example34`)")]
    UnknownOrder(String),

    #[error("unknown corpus form `{0}`")]
    UnknownCorpus(String),

    #[error("principal minor enumeration capped at dimension {cap}, got {dim}")]
    MinorsDimensionCap { dim: usize, cap: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NonConvergence { sweeps: usize, off: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("PSD criteria disagree: {0}")]
    CriterionDisagreement(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("structural mismatch: {0}")]
    Structural(String),
}
