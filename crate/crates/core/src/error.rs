use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state or control of one environment family was handed to another.
    #[error("variant mismatch: expected {expected}, found {found}")]
    VariantMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("state became non-finite: {0:?}")]
    NonFinite([f64; 4]),

    #[error("cannot step from leaf node {0}")]
    LeafStep(&'static str),

    #[error("{what} did not converge within {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("supervisor baseline {0} is too small to normalize against")]
    DegenerateBaseline(f64),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed csv at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
