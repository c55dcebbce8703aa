use thiserror::Error;

/// Errors raised anywhere in the segmentation stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-positive signal value {value} at frame {index}")]
    NonPositiveSignal { index: usize, value: f64 },

    #[error("degenerate fit: all control values are equal")]
    DegenerateFit,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid acquisition series: {0}")]
    InvalidSeries(String),

    #[error("k = {k} must be smaller than the number of points ({n})")]
    KTooLarge { k: usize, n: usize },

    #[error("neighbor graph is disconnected into {} components (sizes {:?})", .sizes.len(), .sizes)]
    DisconnectedGraph { sizes: Vec<usize> },

    #[error("diffusion kernel width must be positive, got {0}")]
    SigmaNonPositive(f64),

    #[error("landmark set is empty")]
    EmptyLandmarks,

    #[error("ensemble runs cover different point counts ({expected} vs {found})")]
    MismatchedRunSizes { expected: usize, found: usize },

    #[error("no clusters to classify")]
    NoClusters,

    #[error("mask selects no voxels")]
    EmptyMask,

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("phantom regions {0} and {1} overlap")]
    OverlappingRegions(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing required channel `{0}`")]
    MissingChannel(String),

    #[error("parameter `{name}` = {value} outside range {range}")]
    OutOfRangeParam {
        name: String,
        value: String,
        range: String,
    },

    #[error("syntax error at line {line}: {message}")]
    SyntaxError { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Numeric failures (as opposed to bad input) map to exit code 2 in the CLI.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DisconnectedGraph { .. }
                | Error::DegenerateFit
                | Error::ZeroVariance(_)
                | Error::NoClusters
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
