use std::path::PathBuf;

/// Error type shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on a mathematical argument was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A query reached past the data a store actually holds.
    #[error("out of range: {what} = {value} exceeds limit {limit}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    /// `mod_inverse` on a non-unit; usually signals a coprimality bug upstream.
    #[error("{a} is not invertible modulo {m} (gcd = {g})")]
    NotInvertible { a: u64, m: u64, g: u64 },

    /// A cache file failed structural validation.
    #[error("cache format error at byte {offset}: {what}")]
    Format { offset: u64, what: String },

    /// A cache file is well-formed but does not cover the requested limit.
    #[error("cache version mismatch: file covers limit {found}, request needs {requested}")]
    CacheMismatch { requested: u64, found: u64 },

    /// An allocation or disk budget was exceeded.
    #[error("resource error: {0}")]
    Resource(String),

    /// A quadrature or iteration failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
