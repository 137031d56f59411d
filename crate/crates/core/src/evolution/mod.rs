//! Grid functions, the operators `T_t`, `𝒜`, `𝒮`, the deterministic evolution
//! and the solvers for the limiting profile.

mod evolve;
mod fixed_point;
mod grid;
pub mod io;
pub(crate) mod ops;
mod phase;
mod shooting;
mod tails;

pub use evolve::evolve;
pub use fixed_point::{fixed_point, fixed_point_with, FixedPointOptions, Method, SolveReport};
pub use grid::{Grid, GridFunction, GridSeries, TailModel, Trajectory};
pub use ops::{op_a, op_s, op_t, op_t_series};
pub use phase::{c_k, min_k_phase, vector_field, PhaseResult};
pub use shooting::ode_solve;
pub use tails::{mean_level, tail_fit, TailFit, TailFitModel};
