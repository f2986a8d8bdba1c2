use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image decode/encode error: {0}")]
    Image(#[from] image::ImageError),

    #[error("malformed {format} data: {reason}")]
    Malformed { format: &'static str, reason: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("invalid value for `{key}`: {value}")]
    InvalidValue { key: String, value: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("disparity range mismatch: expected {expected} levels, found {found}")]
    RangeMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate plane: offset h must be nonzero")]
    DegeneratePlane,

    #[error("non-finite value at pixel ({x}, {y})")]
    NonFinite { x: usize, y: usize },

    #[error("not enough data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn malformed(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Malformed {
            format,
            reason: reason.into(),
        }
    }
}
