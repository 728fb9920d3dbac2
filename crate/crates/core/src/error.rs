use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("rank-deficient state: smallest eigenvalue {min_eigenvalue:.3e}")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular point: {0}")]
    Singular(String),

    #[error("sampler produced no probe states")]
    EmptySampler,

    #[error("unknown probe label `{0}`")]
    UnknownLabel(String),

    #[error("superoperator is not trace preserving (defect {defect:.3e})")]
    NotTracePreserving { defect: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
