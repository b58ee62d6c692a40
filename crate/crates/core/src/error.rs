//! Crate-wide error type.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A factorization hit a pivot below the singularity threshold.
    SingularMatrix(String),
    /// An iterative solver exceeded its sweep budget or stalled.
    NoConvergence(String),
    /// A matrix required to be Hurwitz is not; carries the spectral abscissa.
    NotHurwitz { abscissa: f64 },
    NotStabilizable(String),
    NotDetectable(String),
    InvalidArgument(String),
    InvalidMesh(String),
    ParseError { line: usize, message: String },
    DimensionMismatch(String),
    /// Non-finite value detected (construction or simulation blow-up).
    NonFinite(String),
    QuadratureFailure(String),
    InsufficientData(String),
    /// Controller artifact does not match the scenario plant.
    SpecMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SingularMatrix(m) => write!(f, "singular matrix: {m}"),
            Error::NoConvergence(m) => write!(f, "no convergence: {m}"),
            Error::NotHurwitz { abscissa } => {
                write!(f, "matrix is not Hurwitz (spectral abscissa {abscissa:.3e})")
            }
            Error::NotStabilizable(m) => write!(f, "not stabilizable: {m}"),
            Error::NotDetectable(m) => write!(f, "not detectable: {m}"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::InvalidMesh(m) => write!(f, "invalid mesh: {m}"),
            Error::ParseError { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::DimensionMismatch(m) => write!(f, "dimension mismatch: {m}"),
            Error::NonFinite(m) => write!(f, "non-finite value: {m}"),
            Error::QuadratureFailure(m) => write!(f, "quadrature failure: {m}"),
            Error::InsufficientData(m) => write!(f, "insufficient data: {m}"),
            Error::SpecMismatch(m) => write!(f, "spec mismatch: {m}"),
        }
    }
}

impl std::error::Error for Error {}
