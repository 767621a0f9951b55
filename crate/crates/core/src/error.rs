use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the simulator can report.
///
/// Variants are grouped by the exit code the CLI maps them to: configuration
/// problems exit with 1, numerical guards with 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian: max |A - A^dagger| = {deviation:e}")]
    NonHermitian { deviation: f64 },

    #[error("operator is not unitary: max |U U^dagger - 1| = {deviation:e}")]
    NonUnitary { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid factor dimensions {0:?}: every factor must be >= 1")]
    InvalidDims(Vec<usize>),

    #[error("function is undefined at eigenvalue {eigenvalue:e}")]
    UndefinedFunction { eigenvalue: f64 },

    #[error("partial trace needs a non-empty set of kept factors")]
    EmptyKeep,

    #[error("factor index {index} out of range for {count} factors")]
    FactorOutOfRange { index: usize, count: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("Fock truncation too small: top-level population {tail:e} exceeds {limit:e}; raise N")]
    TruncationTooSmall { tail: f64, limit: f64 },

    #[error("displacement |alpha|^2 = {alpha_sq} exceeds N/4 = {limit} for truncation N = {n}")]
    DisplacementTooLarge { alpha_sq: f64, limit: f64, n: usize },

    #[error("spectral density has a pole at omega = {omega} (zero width)")]
    Pole { omega: f64 },

    #[error("trace drifted to {trace} at t = {t}")]
    TraceDrift { t: f64, trace: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NotFinite { t: f64 },

    #[error("vectorized dimension {side} exceeds the Liouvillian limit {limit}")]
    MemoryGuard { side: usize, limit: usize },

    #[error("Liouvillian eigenbasis condition estimate {cond:e} exceeds {limit:e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("state has eigenvalue {eigenvalue:e} below the clipping floor {floor:e}")]
    SevereNegativity { eigenvalue: f64, floor: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// CLI exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::InvalidParameter(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
