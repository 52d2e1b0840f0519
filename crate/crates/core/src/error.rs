use std::path::PathBuf;

/// Errors produced by matrix construction, analysis, recovery and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid matrix spec: {0}")]
    InvalidSpec(String),

    #[error("column {column} has zero norm")]
    ZeroColumn { column: usize },

    #[error("index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("no column pair is separated by more than d = {d} (N = {n})")]
    NoAdmissiblePair { d: usize, n: usize },

    #[error("test-set cardinality k = {k} too large for N = {n}, d = {d}")]
    CardinalityTooLarge { k: usize, n: usize, d: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("restricted system is rank deficient (sigma_min / sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("enumeration needs more than {budget} candidate pairs; use a smaller instance")]
    EnumerationBudget { budget: usize },

    #[error("true support is empty")]
    EmptySupport,

    #[error("recovered proxy signal is zero; rho_2 is undefined")]
    ZeroProxy,

    #[error("noiseless measurement is zero; SNR is undefined")]
    UndefinedSnr,

    #[error("no {spread}-spread support of size {s} exists in 1..={n}")]
    InfeasibleSpread { n: usize, s: usize, spread: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sweep grids do not match: {0}")]
    GridMismatch(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::Config { .. }
                | Error::InvalidArgument(_)
                | Error::IndexOutOfRange { .. }
                | Error::DimensionMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
