use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid choice rule: {0}")]
    InvalidRule(String),

    #[error("empty interval configuration")]
    EmptyConfig,

    #[error("nonpositive interval length {0}")]
    NonPositiveLength(f64),

    #[error("interval lengths sum to {0}, expected 1 within 1e-9")]
    SumMismatch(f64),

    #[error("position tracking is disabled for this table")]
    PositionsDisabled,

    #[error("interval length {length:e} underflowed at step {step}")]
    LengthUnderflow { step: u64, length: f64 },

    #[error("choice rule `{0}` has no density")]
    NoDensity(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid functions do not share a common grid")]
    GridMismatch,

    #[error("time {t} lies beyond the trajectory end {end}")]
    BeyondTrajectory { t: f64, end: f64 },

    #[error("evolution step lost monotonicity by {violation:e} (budget {budget:e}); refine the grid")]
    Refinement { violation: f64, budget: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("iteration diverged: residual {residual:e} at iteration {iteration}")]
    Divergence { iteration: usize, residual: f64 },

    #[error("shooting bracket failure: {0}")]
    Bracketing(String),

    #[error("bad tail window: {0}")]
    BadWindow(String),

    #[error("candy integral diverges: {0}")]
    Divergent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(value: f64, domain: &'static str) -> Self {
        Error::Domain { value, domain }
    }
}
