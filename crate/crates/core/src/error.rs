use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced a non-finite or degenerate value.
    #[error("numeric failure at step {step}: {what}")]
    Numeric { step: usize, what: String },

    /// `D(u||w)` is infinite because `w` puts zero mass where `u` does not.
    #[error("KL divergence is infinite: w[{index}] = 0 while u[{index}] > 0")]
    InfiniteDivergence { index: usize },

    /// Malformed input file. Row 0 denotes the header or the file as a whole.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
