use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid construction or validation failed.
    InvalidGrid(String),
    /// Too few nodes for the requested stencil.
    GridTooCoarse { nodes: usize, needed: usize },
    /// An evaluation point lies outside the grid.
    OutOfBounds { value: f64, lo: f64, hi: f64 },
    /// Parameter outside the admissible set.
    InvalidParameter(String),
    /// Two sampled arrays that must share a grid do not.
    LengthMismatch { expected: usize, found: usize },
    /// Shooting could not find a sign change.
    ShootingBracket { lo: f64, hi: f64 },
    /// Iteration did not reach the tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    /// A linear system has a (numerically) zero pivot.
    Singular { index: usize },
    /// Factorization succeeded but the smallest pivot is negligible.
    IllConditioned { min_pivot: f64, scale: f64 },
    /// A sampled profile violates a sign or positivity requirement.
    SignViolation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(m) => write!(f, "invalid grid: {m}"),
            Error::GridTooCoarse { nodes, needed } => {
                write!(f, "grid too coarse: {nodes} nodes, stencil needs {needed}")
            }
            Error::OutOfBounds { value, lo, hi } => {
                write!(f, "value {value} outside [{lo}, {hi}]")
            }
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::IllConditioned { min_pivot, scale } => {
                write!(f, "nearly singular system: smallest pivot {min_pivot:e} against scale {scale:e}")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::ShootingBracket { lo, hi } => {
                write!(f, "shooting failed to bracket the root in [{lo}, {hi}]")
            }
            Error::NoConvergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::Singular { index } => write!(f, "singular linear system at pivot {index}"),
            Error::SignViolation(m) => write!(f, "sign condition violated: {m}"),
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
