use std::fmt;

use thiserror::Error;

/// Which runtime floor a guard check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Floor {
    /// |B_0| must stay above `b0_floor`.
    B0,
    /// |Φ| (or |B^μB_μ|) must stay above `phi_floor` where it is divided by.
    Phi,
}

impl fmt::Display for Floor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Floor::B0 => write!(f, "b0_floor"),
            Floor::Phi => write!(f, "phi_floor"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("guard {floor} violated at grid point {index} (value {value:e}, floor {threshold:e})")]
    GuardViolation {
        floor: Floor,
        index: usize,
        value: f64,
        threshold: f64,
    },
    #[error("non-finite value in {what} at grid point {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("step failed at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("singular operator: {0}")]
    SingularOperator(String),
    #[error("B_0 closure degenerate at grid point {index}: coefficient {coefficient:e}, remaining terms {remainder:e}")]
    DegenerateClosure {
        index: usize,
        coefficient: f64,
        remainder: f64,
    },
    #[error("Fock cutoff must be at least 1 (got {0})")]
    CutoffTooSmall(u32),
    #[error("readout undefined: vacuum overlap {overlap:e} below threshold (norm {norm:e})")]
    VacuumOrthogonal { overlap: f64, norm: f64 },
    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("snapshot format version mismatch: expected \"1\", found {0:?}")]
    FormatVersionMismatch(String),
    #[error("truncated snapshot file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_time(self, t: f64) -> Error {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime {
                t,
                source: Box::new(e),
            },
        }
    }

    /// The underlying error, looking through any time annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
