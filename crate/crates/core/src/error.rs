use thiserror::Error;

/// Errors raised across the library.
///
/// The CLI maps [`Error::Config`], [`Error::Io`] and [`Error::Format`] to exit
/// code 2 and every other variant to exit code 3.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("direction is not unit length (|v| = {norm})")]
    Normalization { norm: f64 },

    #[error("point lies on the source ray (transverse distance {distance:e})")]
    OnRay { distance: f64 },

    #[error("dimension {0} is not supported by this operation")]
    UnsupportedDimension(usize),

    #[error("ratio {value} is below h(0) = {floor}; no anisotropy produces it")]
    OutOfRange { value: f64, floor: f64 },

    #[error("ratio {value} exceeds h(1 - 1e-9) = {ceiling}; g lies in [{lower}, 1)")]
    Saturated { value: f64, ceiling: f64, lower: f64 },

    #[error("data inconsistency: {0}")]
    DataInconsistency(String),

    #[error("no convergence after {} orders (last term norm {:e})", history.len(), history.last().copied().unwrap_or(f64::NAN))]
    Convergence { history: Vec<f64> },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
