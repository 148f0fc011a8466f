#![no_std]
#![warn(missing_debug_implementations)]
// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical laboratory for the Parisi functional with step order parameters.
//!
//! For a step order parameter `a` taking the value `m_j` on `(t_j, t_{j+1}]`,
//! the solution of
//!
//! ```text
//! ∂t F = ½ (∂xx F + a(t) (∂x F)²),    F(x, 0) = φ(x)
//! ```
//!
//! is obtained exactly by the Hopf–Cole step
//! `F(x, t_{j+1}) = (1/m_j) log E exp(m_j F(x + √Δt_j z, t_j))`.
//! This crate evaluates that recursion on a grid ([`pde`]), builds the
//! variational value and minimizes it ([`functional`]), and provides probes
//! for the convexity inequalities satisfied by the functional ([`probe`]).
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and the
//! command line runner live in the `parisi-lab` crate.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod functional;
pub mod initial;
pub mod legendre;
mod math;
pub mod nelder_mead;
pub mod params;
pub mod pde;
pub mod probe;
pub mod quad;

mod error;

pub use error::{Error, Side};
pub use functional::{MinimizeResult, OptimizerConfig, ParisiProblem};
pub use initial::{InitialCondition, InitError, Line, PairClass, PhiClass, PiecewiseLinearApprox, Tails};
pub use params::{ParamError, StepParam};
pub use pde::{GridConfig, GridFunction, SolveTrace, Solver, SolverConfig};
pub use probe::{ConvexityReport, MaxPrincipleReport};
pub use quad::{HermiteRule, QuadError};

pub type Result<T> = core::result::Result<T, Error>;
