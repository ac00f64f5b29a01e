use thiserror::Error;

use crate::numeric::DenseMatrix;
use crate::solvers::TraceRecord;

pub type Result<T> = std::result::Result<T, Error>;

/// Iterate and trace captured when a solver hits a non-finite value.
#[derive(Debug, Clone)]
pub struct FailureContext {
    pub iterate: DenseMatrix,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is rank deficient: |R[{index},{index}]| = {value:e}")]
    Singular { index: usize, value: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("numerical failure: {reason}")]
    NumericalFailure {
        reason: String,
        context: Box<FailureContext>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::Shape { expected, got }
    }
}
