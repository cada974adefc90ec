use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A physical or numerical precondition on an input was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix handed to the eigensolver is not Hermitian within tolerance.
    #[error("matrix is not Hermitian: max |H - H^dagger| = {max_dev:.3e} (relative tol {tol:.1e})")]
    NonHermitian { max_dev: f64, tol: f64 },

    /// Fewer data points than free parameters.
    #[error("under-determined fit: {points} points for {params} parameters")]
    InsufficientData { points: usize, params: usize },

    /// The normal matrix stayed singular even under heavy damping.
    #[error("singular normal matrix in least-squares solve")]
    SingularNormalMatrix,

    /// A relaxation trace carries no resolvable decay.
    #[error("trace does not decay; no positive T1 can be reported")]
    NonDecayingTrace,

    /// Malformed row in a delimiter-separated input file.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Underlying filesystem failure.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Bad key or value in a run configuration.
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
