//! The interval configuration of a Ψ-process and its split dynamics.

mod histogram;
mod run;
mod table;
mod tree;

pub use histogram::Histogram;
pub use run::{log_schedule, run, EntropyPoint, LargestPoint, ResidualPoint, SimulationReport};
pub use table::{w_entropy, Compensated, IntervalTable, SplitEvent, UNDERFLOW};
pub use tree::Treap;
