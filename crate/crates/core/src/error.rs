use thiserror::Error;

/// Errors raised by instance construction, the solvers, and the oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("column {col} has no entries; the packing objective is unbounded in that variable")]
    ZeroColumn { col: usize },

    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("entry ({row}, {col}) is zero; structural zeros must be omitted")]
    ExplicitZero { row: usize, col: usize },

    #[error("entry ({row}, {col}) is negative")]
    NegativeEntry { row: usize, col: usize },

    #[error("entry ({row}, {col}) appears more than once")]
    DuplicateEntry { row: usize, col: usize },

    #[error("entry ({row}, {col}) lies outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("epsilon {epsilon} is outside ({min}, {max}]")]
    EpsilonOutOfRange { epsilon: f64, min: f64, max: f64 },

    #[error("penalty exponent of row {row} overflows ({exponent:.3e} > 700)")]
    NumericalOverflow { row: usize, exponent: f64 },

    #[error("gradient component {index} is {value}, below -1")]
    GradientBelowMinusOne { index: usize, value: f64 },

    #[error("{value} is not a valid medium gradient component for epsilon {epsilon}")]
    OutOfDomain { value: f64, epsilon: f64 },

    #[error("objective increased by {increase:.3e} at iteration {iteration}")]
    MonotonicityViolation { iteration: u64, increase: f64 },

    #[error("dual accumulator holds no iterations")]
    EmptyAccumulator,

    #[error("problem of size {size} exceeds the oracle limit {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("simplex exceeded {limit} pivots")]
    CycleLimit { limit: u64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name, used as the `error` field of CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroColumn { .. } => "ZeroColumn",
            Error::NonFinite { .. } => "NonFinite",
            Error::ExplicitZero { .. } => "ExplicitZero",
            Error::NegativeEntry { .. } => "NegativeEntry",
            Error::DuplicateEntry { .. } => "DuplicateEntry",
            Error::IndexOutOfBounds { .. } => "IndexOutOfBounds",
            Error::Parse { .. } => "ParseError",
            Error::EpsilonOutOfRange { .. } => "EpsilonOutOfRange",
            Error::NumericalOverflow { .. } => "NumericalOverflow",
            Error::GradientBelowMinusOne { .. } => "GradientBelowMinusOne",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::MonotonicityViolation { .. } => "MonotonicityViolation",
            Error::EmptyAccumulator => "EmptyAccumulator",
            Error::SizeLimit { .. } => "SizeLimit",
            Error::CycleLimit { .. } => "CycleLimit",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "IoError",
        }
    }

    /// True for failures of the numerical trajectory rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalOverflow { .. }
                | Error::GradientBelowMinusOne { .. }
                | Error::MonotonicityViolation { .. }
                | Error::CycleLimit { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
