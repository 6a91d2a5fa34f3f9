use thiserror::Error;

/// Errors produced by configuration, sensing, recovery, and the experiment
/// harness. The CLI maps these onto process exit codes, so keep the
/// variants coarse: configuration-shaped problems vs. I/O vs. run failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("record does not belong to operator: fingerprint {record:#018x} != {operator:#018x}")]
    Binding { operator: u64, record: u64 },

    #[error("conjugate symmetry violated: relative imaginary residue {residue:.3e} exceeds {tolerance:.1e}")]
    SymmetryViolation { residue: f64, tolerance: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("all levels failed: {0}")]
    AllLevelsFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
