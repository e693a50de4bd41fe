use thiserror::Error;

use crate::measure::PovmValidation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("eigenvalue {eigenvalue} of a POVM element lies outside [0, 1]")]
    EigenvalueOutOfUnitInterval { eigenvalue: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("value {value} outside the admissible range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("unknown kernel `{0}` (expected wootters, bures or root-infidelity)")]
    UnknownKernel(String),

    #[error("invalid kernel `{name}`: {reason}")]
    InvalidKernel { name: String, reason: String },

    #[error("kernel `{name}` does not induce a metric: {violations} triangle violations (worst slack {worst_slack:e})")]
    NotAMetric {
        name: String,
        violations: usize,
        worst_slack: f64,
    },

    #[error("invalid POVM: {0}")]
    InvalidPovm(PovmValidation),

    #[error("PVM element is not a projector (max |P² − P| = {defect:e})")]
    NotProjective { defect: f64 },

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
