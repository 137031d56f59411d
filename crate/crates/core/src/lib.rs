//! Simulation of Ψ-interval-splitting processes and numerical computation of
//! their limiting size-biased length profile `F^Ψ`.
//!
//! - [`psi`]: choice rules `Ψ`.
//! - [`intervals`]: the live interval configuration and the split dynamics.
//! - [`evolution`]: grid functions, the deterministic evolution and the
//!   fixed-point solvers.
//! - [`metrics`]: norms, distances and functionals shared by both sides.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod error;
pub mod evolution;
pub mod intervals;
pub mod metrics;
pub mod ode;
pub mod psi;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
pub use evolution::{Grid, GridFunction, TailModel, Trajectory};
pub use intervals::IntervalTable;
pub use psi::ChoiceRule;
