use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes `0 = x_0 < x_1 < … < x_N`. Solver grids are geometric from `x_1` on.
#[derive(Debug, Clone)]
pub struct Grid {
    xs: Arc<[f64]>,
    log_step: Option<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.xs, &other.xs) || self.xs[..] == other.xs[..]
    }
}

impl Grid {
    pub const DEFAULT_POINTS: usize = 4096;
    pub const DEFAULT_XMIN: f64 = 1e-4;

    /// `points` geometric nodes from `x_min` to `x_max`, preceded by 0.
    pub fn geometric(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("need 0 < x_min < x_max, got {x_min}, {x_max}")));
        }
        if points < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 points, got {points}")));
        }
        let h = (x_max / x_min).ln() / (points - 1) as f64;
        let mut xs = Vec::with_capacity(points + 1);
        xs.push(0.0);
        for i in 0..points {
            xs.push(x_min * (i as f64 * h).exp());
        }
        xs[1] = x_min;
        xs[points] = x_max;
        Ok(Grid { xs: xs.into(), log_step: Some(h) })
    }

    /// Solver grid with the default density and `x_min`.
    pub fn solver_default(x_max: f64) -> Result<Self> {
        Grid::geometric(Self::DEFAULT_XMIN, x_max, Self::DEFAULT_POINTS)
    }

    /// Arbitrary nodes; the grid is flagged geometric when the node ratios agree.
    pub fn from_nodes(xs: Vec<f64>) -> Result<Self> {
        if xs.len() < 3 {
            return Err(Error::InvalidGrid("need at least three nodes".into()));
        }
        if xs[0] != 0.0 {
            return Err(Error::InvalidGrid("first node must be 0".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidGrid("nodes must be finite and strictly increasing".into()));
        }
        let n = xs.len() - 1;
        let h = (xs[n] / xs[1]).ln() / (n - 1) as f64;
        let geometric = n >= 3 && xs[1..].windows(2).all(|w| ((w[1] / w[0]).ln() - h).abs() <= 1e-9 * h.max(1e-300));
        Ok(Grid { xs: xs.into(), log_step: geometric.then_some(h) })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.xs[1]
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// `ln(x_{i+1}/x_i)` when the positive nodes are geometric.
    pub fn log_step(&self) -> Option<f64> {
        self.log_step
    }

    /// Index of the last node `<= x`.
    pub fn locate(&self, x: f64) -> usize {
        self.xs.partition_point(|&v| v <= x).saturating_sub(1)
    }
}

/// Shape of `F` beyond the last node: `F(x) = tail − gap · m(x)` with
/// `gap = tail − F(x_N)` and `m(x_N) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TailModel {
    /// `F` stays at its last value.
    Truncated,
    /// `m(x) = exp(−rate (x − x_N))`.
    Exponential { rate: f64 },
    /// `m(x) = (x / x_N)^{−exponent}`.
    Power { exponent: f64 },
}

impl TailModel {
    pub fn shape(&self, x: f64, x_n: f64) -> f64 {
        match *self {
            TailModel::Truncated => 0.0,
            TailModel::Exponential { rate } => (-rate * (x - x_n)).exp(),
            TailModel::Power { exponent } => (x / x_n).powf(-exponent),
        }
    }
}

/// Plain samples on a grid with a quadratic model `v_0 + q x²` on `[0, x_1]`
/// and zero beyond the grid; carries values that need not be monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSeries {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub q: f64,
}

/// Discretized subdistribution function: nondecreasing values in `[0, 1]`,
/// linear between nodes, `values[0] + q x²` on `[0, x_1]`, tail model beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    tail_value: f64,
    q: f64,
    slopes: Option<Vec<f64>>,
    tail: TailModel,
}

impl GridFunction {
    pub fn from_values(grid: &Grid, values: Vec<f64>, tail_value: f64, tail: TailModel) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidGrid("values must lie in [0, 1]".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGrid("values must be nondecreasing".into()));
        }
        let last = values[values.len() - 1];
        let tail_value = match tail {
            TailModel::Truncated => tail_value.max(last),
            _ => tail_value,
        };
        if !(tail_value >= last && tail_value <= 1.0) {
            return Err(Error::InvalidGrid(format!("tail value {tail_value} outside [{last}, 1]")));
        }
        let q = (values[1] - values[0]) / (grid.xs[1] * grid.xs[1]);
        Ok(GridFunction { grid: grid.clone(), values, tail_value, q, slopes: None, tail })
    }

    /// Samples `f` at the nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Grid, f: F, tail_value: f64, tail: TailModel) -> Result<Self> {
        let values = grid.xs().iter().map(|&x| f(x)).collect();
        GridFunction::from_values(grid, values, tail_value, tail)
    }

    /// `1 − (1 + x) e^{−x}`, the profile of uniform splitting.
    pub fn size_biased_exponential(grid: &Grid) -> Self {
        let mut g = GridFunction::from_fn(
            grid,
            |x| (-(-x).exp_m1() - x * (-x).exp()).clamp(0.0, 1.0),
            1.0,
            TailModel::Exponential { rate: 1.0 },
        )
        .expect("valid profile");
        g.slopes = Some(grid.xs().iter().map(|&x| x * (-x).exp()).collect());
        g.q = 0.5;
        g
    }

    /// `x²/4 ∧ 1`, the Kakutani profile.
    pub fn kakutani_limit(grid: &Grid) -> Self {
        let mut g =
            GridFunction::from_fn(grid, |x| (0.25 * x * x).min(1.0), 1.0, TailModel::Truncated).expect("valid profile");
        g.q = 0.25;
        g
    }

    /// Attaches derivative values at the nodes (used for Hermite quadrature).
    pub fn with_slopes(mut self, slopes: Vec<f64>) -> Result<Self> {
        if slopes.len() != self.values.len() {
            return Err(Error::GridMismatch);
        }
        self.slopes = Some(slopes);
        Ok(self)
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn xs(&self) -> &[f64] {
        self.grid.xs()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_value(&self) -> f64 {
        self.tail_value
    }

    pub fn tail(&self) -> TailModel {
        self.tail
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn slopes(&self) -> Option<&[f64]> {
        self.slopes.as_deref()
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `tail − F(x_N)`; zero for truncated tails.
    pub fn gap(&self) -> f64 {
        match self.tail {
            TailModel::Truncated => 0.0,
            _ => self.tail_value - self.last(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let xs = self.grid.xs();
        let n = xs.len() - 1;
        if x <= xs[1] {
            return self.values[0] + self.q * x * x;
        }
        if x >= xs[n] {
            return match self.tail {
                TailModel::Truncated => self.values[n],
                m => self.tail_value - self.gap() * m.shape(x, xs[n]),
            };
        }
        let i = self.grid.locate(x);
        let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Frames of the deterministic evolution on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub frames: Vec<GridFunction>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, frames: Vec<GridFunction>) -> Result<Self> {
        if times.is_empty() || times.len() != frames.len() {
            return Err(Error::InvalidGrid("trajectory needs one frame per time".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("times must start at 0 and increase".into()));
        }
        if frames.iter().any(|f| f.grid() != frames[0].grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Trajectory { times, frames })
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &GridFunction {
        self.frames.last().unwrap()
    }
}
