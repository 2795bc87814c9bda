use alloc::string::String;
use core::fmt;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Dimension or shape mismatch between inputs.
    Shape(String),
    /// A parameter is outside its admissible range.
    Param(String),
    /// Input data violates a structural requirement (ordering, finiteness,
    /// sentinel values).
    Data(String),
    /// A numeric computation failed (NaN/Inf iterates, nonpositive wealth
    /// factor, factorization breakdown).
    Numerical(String),
    /// The computation is well posed but its result is degenerate
    /// (zero variance, all-zero portfolio, r_bar equal to rho).
    Degenerate(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Param(msg) => write!(f, "parameter error: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate result: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
