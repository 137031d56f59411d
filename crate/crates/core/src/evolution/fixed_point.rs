//! The limiting profile `F^Ψ` as the fixed point of the evolution map.

use serde::Serialize;

use super::evolve::Evolver;
use super::grid::{Grid, GridFunction, TailModel};
use crate::error::{Error, Result};
use crate::metrics;
use crate::psi::{ChoiceRule, TailKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Picard,
    Shoot,
}

/// Diagnostics written next to every solved profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub rule: String,
    pub method: Method,
    pub grid_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub tol: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Candy distance between successive sweeps (picard) or `|F(∞) − 1|` per bisection (shoot).
    pub residual_trace: Vec<f64>,
    /// Length of one sweep of the evolution map (picard only).
    pub sweep_time: Option<f64>,
    /// `F''(0⁺)` found by shooting.
    pub curvature: Option<f64>,
    pub candy_norm: f64,
    pub mass: f64,
    pub drift: f64,
    pub tail_value: f64,
    pub tail: TailModel,
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Target sweep length; rounded to a whole number of double steps.
    pub sweep_time: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { tol: 1e-8, max_iterations: 200, sweep_time: 1.0 }
    }
}

/// Builds the output profile from node values `f` and `J` at the positive
/// nodes, with slopes `F' = x J` and the tail implied by the rule.
pub(crate) fn finish_profile(
    rule: &ChoiceRule,
    grid: &Grid,
    f: &[f64],
    j: &[f64],
) -> Result<(GridFunction, f64, TailModel)> {
    let xs = &grid.xs()[1..];
    let n = xs.len();
    let slopes_pos: Vec<f64> = xs.iter().zip(j).map(|(x, j)| x * j).collect();
    let (xn, fn_, dn) = (xs[n - 1], f[n - 1], slopes_pos[n - 1]);
    let (tail, estimate) = match rule.tail_kind() {
        TailKind::Exponential => {
            let a = rule.density_clamped(fn_.min(1.0)).unwrap_or(0.0);
            let a = if a > 0.0 { a } else { rule.density_clamped(1.0).unwrap_or(1.0) };
            (TailModel::Exponential { rate: a }, fn_ + dn / xn * (xn / a + 1.0 / (a * a)))
        }
        TailKind::Power => {
            let (g0, g1) = (1.0 - f[n - 2], 1.0 - fn_);
            let p = if g1 > 0.0 && g0 > g1 { (g0 / g1).ln() / (xn / xs[n - 2]).ln() } else { 1.0 };
            (TailModel::Power { exponent: p }, fn_ + dn * xn / p)
        }
        TailKind::Truncated => (TailModel::Truncated, fn_),
    };
    let tail_value = estimate.clamp(fn_.min(1.0), 1.0);
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    values.extend(f.iter().map(|v| v.clamp(0.0, 1.0)));
    let mut slopes = Vec::with_capacity(n + 1);
    slopes.push(0.0);
    slopes.extend_from_slice(&slopes_pos);
    let profile = GridFunction::from_values(grid, values, tail_value, tail)?.with_slopes(slopes)?;
    Ok((profile, estimate, tail))
}

/// Once `1 − Ψ(F)` is below what node differences resolve, `J` is carried
/// on by `J' = −ψ(F) J` instead of summing rounded-off increments.
fn continue_tail(rule: &ChoiceRule, xs: &[f64], f: &[f64], mut j: Vec<f64>) -> Vec<f64> {
    if !rule.has_density() {
        return j;
    }
    let Some(m) = f.iter().position(|&v| rule.complement_clamped(v) < 1e-7) else {
        return j;
    };
    let psi = |v: f64| rule.density_clamped(v).unwrap_or(0.0);
    for i in m.max(1)..j.len() {
        let rate = 0.5 * (psi(f[i - 1]) + psi(f[i]));
        j[i] = j[i - 1] * (-rate * (xs[i] - xs[i - 1])).exp();
    }
    j
}

pub(crate) fn normalization(rule: &ChoiceRule, f: &GridFunction) -> Result<(f64, f64, f64)> {
    Ok((metrics::candy_norm(f)?, metrics::mass_integral(f)?, metrics::drift_d(rule, f)?))
}

/// Iterates the unit-time evolution map from the size-biased exponential
/// until successive sweeps agree in candy distance to `tol`.
pub fn fixed_point(rule: &ChoiceRule, grid: &Grid, tol: f64) -> Result<(GridFunction, SolveReport)> {
    fixed_point_with(rule, grid, FixedPointOptions { tol, ..Default::default() }, None)
}

pub fn fixed_point_with(
    rule: &ChoiceRule,
    grid: &Grid,
    opts: FixedPointOptions,
    start: Option<&GridFunction>,
) -> Result<(GridFunction, SolveReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::domain(opts.tol, "tol > 0"));
    }
    let ev = Evolver::new(rule, grid, 1.0)?;
    let dt = 2.0 * ev.h();
    let steps = ((opts.sweep_time / dt).round() as usize).max(1);
    let tail = match rule.tail_kind() {
        TailKind::Exponential => TailModel::Exponential { rate: 1.0 },
        TailKind::Power => TailModel::Power { exponent: 1.0 },
        TailKind::Truncated => TailModel::Truncated,
    };
    let as_function = |pos: &[f64]| -> Result<GridFunction> {
        let mut values = Vec::with_capacity(pos.len() + 1);
        values.push(0.0);
        values.extend_from_slice(pos);
        GridFunction::from_values(grid, values, 1.0, tail)
    };
    let init = match start {
        Some(f) => {
            if f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            f.clone()
        }
        None => GridFunction::size_biased_exponential(grid),
    };
    let mut cur_values = init.values()[1..].to_vec();
    let mut cur = as_function(&cur_values)?;
    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut converged = false;
    for it in 1..=opts.max_iterations {
        let next_values = ev.advance(&cur_values, steps)?;
        let next = as_function(&next_values)?;
        let res = metrics::d_candy(&cur, &next)?;
        trace.push(res);
        if !res.is_finite() {
            return Err(Error::Divergence { iteration: it, residual: res });
        }
        if it > 5 && res > 1e3 * best {
            return Err(Error::Divergence { iteration: it, residual: res });
        }
        best = best.min(res);
        cur_values = next_values;
        cur = next;
        if res < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations: opts.max_iterations, residual: *trace.last().unwrap() });
    }
    let j = continue_tail(rule, &grid.xs()[1..], &cur_values, ev.op().j(&cur_values, 1.0));
    let (profile, tail_value, tail) = finish_profile(rule, grid, &cur_values, &j)?;
    let (candy, mass, drift) = normalization(rule, &profile)?;
    let report = SolveReport {
        rule: rule.to_string(),
        method: Method::Picard,
        grid_points: grid.len() - 1,
        x_min: grid.x_min(),
        x_max: grid.x_max(),
        tol: opts.tol,
        converged,
        iterations: trace.len(),
        residual_trace: trace,
        sweep_time: Some(steps as f64 * dt),
        curvature: None,
        candy_norm: candy,
        mass,
        drift,
        tail_value,
        tail,
    };
    Ok((profile, report))
}
