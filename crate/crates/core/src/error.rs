use thiserror::Error;

/// Errors produced by the library.
///
/// `InvalidInput` covers precondition violations (bad domains, mismatched
/// dimensions, malformed files); `Numerical` covers solver and factorization
/// failures. The CLI maps the former to exit code 2 and the latter to 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("tolerance {requested:e} unachievable; achievable is about {achievable:e}")]
    ToleranceUnachievable { requested: f64, achievable: f64 },

    #[error("problem size {n} exceeds limit {limit} for {what}")]
    SizeOverLimit { what: &'static str, n: usize, limit: usize },

    #[error("rank cap {cap} exceeded in low-rank solve; use the normal-krylov method")]
    RankCapExceeded { cap: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by bad configuration or input rather than
    /// numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::CsvParse { .. } | Error::Io { .. } | Error::SizeOverLimit { .. }
        )
    }
}
