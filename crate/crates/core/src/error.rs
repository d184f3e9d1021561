use thiserror::Error;

use crate::model::ModelKind;

/// Errors raised by the library.
///
/// `Structural` covers malformed inputs (wrong dimensions, empty or
/// non-finite data, levels outside (0,1)); everything else is a domain
/// failure of a specific operation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{kind} expects {expected} parameters, got {got}")]
    Dimension {
        kind: ModelKind,
        expected: usize,
        got: usize,
    },

    #[error("invalid {kind} parameters: {}", violations.join("; "))]
    InvalidParams {
        kind: ModelKind,
        violations: Vec<String>,
    },

    #[error("{0}")]
    Structural(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("{op} is not available for {kind}")]
    Unsupported { op: &'static str, kind: ModelKind },

    #[error("infeasible split for T={t}: T_E={t_e}, T_P={t_p} (need 1 < T_E < T_P <= T)")]
    InfeasibleSplit { t: usize, t_e: i64, t_p: i64 },

    #[error("average outer-product matrix is singular")]
    SingularCovariance,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
