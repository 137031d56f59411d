//! The deterministic evolution `∂_t F + x ∂_x F = 𝒜F`, integrated along its
//! characteristics `x e^{t}`. On a geometric grid with `h = ln(x_{i+1}/x_i)`
//! a step of `2h` moves every characteristic exactly two nodes, so classical
//! RK4 with its midpoint stage on a node needs no interpolation at all.

use super::grid::{Grid, GridFunction, Trajectory};
use super::ops::{hermite, pchip_slopes, JOperator};
use crate::error::{Error, Result};
use crate::psi::ChoiceRule;

#[derive(Debug, Clone)]
pub(crate) struct Evolver {
    op: JOperator,
    h: f64,
    tail_value: f64,
}

/// Values at `u_j − s h` for every positive node `j`. Fractional shifts use
/// a monotone cubic in `u`, which does not overshoot at kinks; below the
/// first node `v_0 e^{2(j−s)h}`, matching `F ∝ x²`.
fn shift(v: &[f64], s: f64, h: f64) -> Vec<f64> {
    let n = v.len();
    let whole = s.round();
    if (s - whole).abs() < 1e-12 {
        let k = whole as usize;
        return (0..n)
            .map(|j| if j >= k { v[j - k] } else { v[0] * (2.0 * (j as f64 - k as f64) * h).exp() })
            .collect();
    }
    let idx: Vec<f64> = (0..n).map(|j| j as f64).collect();
    let d = pchip_slopes(&idx, v);
    (0..n)
        .map(|j| {
            let p = j as f64 - s;
            if p < 0.0 {
                return v[0] * (2.0 * p * h).exp();
            }
            let i = (p.floor() as usize).min(n - 2);
            hermite(i as f64, (i + 1) as f64, v[i], v[i + 1], d[i], d[i + 1], p)
        })
        .collect()
}

impl Evolver {
    pub fn new(rule: &ChoiceRule, grid: &Grid, tail_value: f64) -> Result<Self> {
        let h = grid.log_step().ok_or_else(|| Error::InvalidGrid("the evolution needs a geometric grid".into()))?;
        if grid.len() < 9 {
            return Err(Error::InvalidGrid("grid too small for the evolution".into()));
        }
        Ok(Evolver { op: JOperator::new(rule, grid), h, tail_value })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn op(&self) -> &JOperator {
        &self.op
    }

    /// One RK4 step of length `tau` on the positive-node values `f`; returns
    /// the re-monotonized state and the worst monotonicity violation next to
    /// its tolerated budget.
    pub fn step(&self, f: &[f64], tau: f64) -> (Vec<f64>, f64, f64) {
        let h = self.h;
        let s = tau / h;
        let a = |w: &[f64]| self.op.a(w, self.tail_value);
        let k1 = a(f);
        let f_half = shift(f, 0.5 * s, h);
        let f_full = shift(f, s, h);
        let k1_half = shift(&k1, 0.5 * s, h);
        let k1_full = shift(&k1, s, h);
        let w1: Vec<f64> = f_half.iter().zip(&k1_half).map(|(y, k)| y + 0.5 * tau * k).collect();
        let k2 = a(&w1);
        let w2: Vec<f64> = f_half.iter().zip(&k2).map(|(y, k)| y + 0.5 * tau * k).collect();
        let k3 = a(&w2);
        let k2_half = shift(&k2, 0.5 * s, h);
        let k3_half = shift(&k3, 0.5 * s, h);
        let w3: Vec<f64> = f_full.iter().zip(&k3_half).map(|(y, k)| y + tau * k).collect();
        let k4 = a(&w3);
        let mut out = Vec::with_capacity(f.len());
        let mut err: f64 = 0.0;
        for j in 0..f.len() {
            let rk4 = f_full[j] + tau / 6.0 * (k1_full[j] + 2.0 * k2_half[j] + 2.0 * k3_half[j] + k4[j]);
            let midpoint = f_full[j] + tau * k2_half[j];
            err = err.max((rk4 - midpoint).abs());
            out.push(rk4);
        }
        let mut violation: f64 = 0.0;
        let mut running = 0.0f64;
        for v in out.iter_mut() {
            let clamped = v.clamp(0.0, self.tail_value);
            violation = violation.max((*v - clamped).abs()).max(running - clamped);
            running = running.max(clamped);
            *v = running;
        }
        (out, violation, 10.0 * err + 1e-13)
    }

    /// Advances by `steps` exact double steps `2h`.
    pub fn advance(&self, f: &[f64], steps: usize) -> Result<Vec<f64>> {
        let mut cur = f.to_vec();
        for _ in 0..steps {
            let (next, violation, budget) = self.step(&cur, 2.0 * self.h);
            if violation > budget {
                return Err(Error::Refinement { violation, budget });
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { iteration: 0, residual: f64::NAN });
            }
            cur = next;
        }
        Ok(cur)
    }
}

fn frame(template: &GridFunction, positive: &[f64]) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(positive.len() + 1);
    values.push(template.values()[0]);
    values.extend_from_slice(positive);
    let tail_value = template.tail_value().max(*values.last().unwrap());
    GridFunction::from_values(template.grid(), values, tail_value, template.tail())
}

/// Evolves `f0` to time `t_end`, recording `steps + 1` equally spaced frames.
/// Internal steps are `2h`; frames between them come from a partial RK4 step
/// that is not fed back into the march.
pub fn evolve(rule: &ChoiceRule, f0: &GridFunction, t_end: f64, steps: usize) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::domain(t_end, "T > 0"));
    }
    if steps == 0 {
        return Err(Error::domain(0.0, "steps >= 1"));
    }
    let ev = Evolver::new(rule, f0.grid(), f0.tail_value())?;
    let dt = 2.0 * ev.h();
    let mut times = vec![0.0];
    let mut frames = vec![f0.clone()];
    let mut state = f0.values()[1..].to_vec();
    let mut marched = 0usize;
    for k in 1..=steps {
        let t = t_end * k as f64 / steps as f64;
        let target = ((t / dt) + 1e-9).floor() as usize;
        state = ev.advance(&state, target - marched)?;
        marched = target;
        let rest = t - marched as f64 * dt;
        let out = if rest > 1e-12 {
            let (partial, violation, budget) = ev.step(&state, rest);
            if violation > budget {
                return Err(Error::Refinement { violation, budget });
            }
            partial
        } else {
            state.clone()
        };
        times.push(t);
        frames.push(frame(f0, &out)?);
    }
    Trajectory::new(times, frames)
}
