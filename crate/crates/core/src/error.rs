//! Error types shared across the crate.

use thiserror::Error;

/// All failure modes of the library, grouped by the class name that the
/// CLI reports on stderr and maps to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// A file does not match its declared on-disk format.
    #[error("FormatError: {0}")]
    Format(String),

    /// File contents parsed but carry invalid values (NaN/Inf, empty data).
    #[error("DataError: {0}")]
    Data(String),

    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),

    /// Invalid synthetic-dataset specification.
    #[error("SpecError: {0}")]
    Spec(String),

    /// Estimator configuration inconsistent with the dataset.
    #[error("ConfigError: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("DomainError: {0}")]
    Domain(String),

    /// A (process, target) pair or constant set that is not supported.
    #[error("UnsupportedError: {0}")]
    Unsupported(String),

    /// Query outside the span of an estimated curve; no silent extrapolation.
    #[error("ExtrapolationError: {0}")]
    Extrapolation(String),

    /// Bin grid does not match the expected grid.
    #[error("AlignmentError: {0}")]
    Alignment(String),

    /// The curve never leaves zero, so no critical point exists.
    #[error("NoCriticalPointError: {0}")]
    NoCriticalPoint(String),

    /// Power-law offset leaves a nonpositive loss residual.
    #[error("OffsetError: {0}")]
    Offset(String),

    /// Fit input carries no usable signal (e.g. constant losses).
    #[error("DegenerateFitError: {0}")]
    DegenerateFit(String),

    /// Structurally invalid input to an operation (empty list, too few points).
    #[error("InputError: {0}")]
    Input(String),
}

impl Error {
    /// The error-class name, as printed on stderr by the CLI.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Format(_) => "FormatError",
            Error::Data(_) => "DataError",
            Error::Io(_) => "IoError",
            Error::Spec(_) => "SpecError",
            Error::Config(_) => "ConfigError",
            Error::Domain(_) => "DomainError",
            Error::Unsupported(_) => "UnsupportedError",
            Error::Extrapolation(_) => "ExtrapolationError",
            Error::Alignment(_) => "AlignmentError",
            Error::NoCriticalPoint(_) => "NoCriticalPointError",
            Error::Offset(_) => "OffsetError",
            Error::DegenerateFit(_) => "DegenerateFitError",
            Error::Input(_) => "InputError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
