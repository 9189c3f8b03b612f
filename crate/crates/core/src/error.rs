use thiserror::Error;

/// A grid cell on which root refinement failed, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDiagnostic {
    pub lo: [f64; 2],
    pub side: f64,
    pub last_residual: f64,
}

#[derive(Debug, Error)]
pub enum FqError {
    #[error("unknown system `{name}`; valid names: {valid}")]
    UnknownSystem { name: String, valid: String },

    #[error("malformed system: {0}")]
    MalformedSystem(String),

    #[error("operation requires a {expected} system")]
    WrongForm { expected: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} = {value} is outside the supported range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("enumeration incomplete: {} cell(s) failed to converge", cells.len())]
    EnumerationIncomplete { cells: Vec<CellDiagnostic> },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("candidate budget exceeded: {count} candidates (cap {cap})")]
    Budget { count: usize, cap: usize },

    #[error("quadrature did not converge at rho = {rho}")]
    Quadrature { rho: f64 },

    #[error("unsupported exponent: a = P = {0} is excluded")]
    UnsupportedExponent(f64),

    #[error("truncation tail bound {tail:e} exceeds tolerance {tol:e}; increase gamma_cut or t")]
    Truncation { tail: f64, tol: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch: expected {expected}, found {found}")]
    Checksum { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FqError>;
