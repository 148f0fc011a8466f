use core::fmt;

use crate::initial::InitError;
use crate::params::ParamError;
use crate::quad::QuadError;

/// Which side of the grid a tail belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

/// Crate-level error for solver, functional and probe operations.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    Quad(QuadError),
    Param(ParamError),
    Init(InitError),
    InvalidGrid(&'static str),
    InvalidConfig(&'static str),
    /// Grid value and linear tail disagree at the splice point.
    TailInconsistency { side: Side, t: f64, mismatch: f64 },
    /// `a1 ≤ a2` fails; `t` is a time where `a1(t) > a2(t)`.
    OrderingViolation { t: f64, a1: f64, a2: f64 },
    /// A probe precondition failed; the message names the violated condition.
    Precondition(&'static str),
    /// Gibbs weight could not be normalized to unit mass.
    WeightNormalization { mass: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Quad(e) => write!(f, "quadrature: {e}"),
            Error::Param(e) => write!(f, "order parameter: {e}"),
            Error::Init(e) => write!(f, "initial condition: {e}"),
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::TailInconsistency { side, t, mismatch } => write!(
                f,
                "{side} tail does not match grid at t = {t}: mismatch {mismatch:.3e}"
            ),
            Error::OrderingViolation { t, a1, a2 } => {
                write!(f, "a1 <= a2 violated at t = {t}: a1 = {a1}, a2 = {a2}")
            }
            Error::Precondition(msg) => write!(f, "precondition failed: {msg}"),
            Error::WeightNormalization { mass } => {
                write!(f, "weight normalization failed: E W = {mass}")
            }
        }
    }
}

impl core::error::Error for Error {}

impl From<QuadError> for Error {
    fn from(e: QuadError) -> Self {
        Error::Quad(e)
    }
}

impl From<ParamError> for Error {
    fn from(e: ParamError) -> Self {
        Error::Param(e)
    }
}

impl From<InitError> for Error {
    fn from(e: InitError) -> Self {
        Error::Init(e)
    }
}
