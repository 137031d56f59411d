//! The operators `T_t`, `𝒜` and `𝒮^Ψ` on grid functions.

use super::grid::{Grid, GridFunction, GridSeries, TailModel, Trajectory};
use crate::error::{Error, Result};
use crate::psi::{ChoiceRule, TailKind};
use crate::quad;

/// Monotone (Fritsch–Butland) derivative estimates of `y` against `u`.
pub(crate) fn pchip_slopes(u: &[f64], y: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    let h: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a * b <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d
}

/// Cubic Hermite value on `[u0, u1]`.
pub(crate) fn hermite(u0: f64, u1: f64, y0: f64, y1: f64, d0: f64, d1: f64, u: f64) -> f64 {
    let h = u1 - u0;
    let t = (u - u0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

/// Derivative of [`hermite`] with respect to `u`.
pub(crate) fn hermite_deriv(u0: f64, u1: f64, y0: f64, y1: f64, d0: f64, d1: f64, u: f64) -> f64 {
    let h = u1 - u0;
    let t = (u - u0) / h;
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * h * d1)
        / h
}

/// Evaluates grid data at `e^{−t} x_j` for every node: PCHIP in `log x`
/// inside the grid, `v_0 + q x²` below `x_1`. Returns the new values.
pub(crate) fn pull_back(grid: &Grid, values: &[f64], q: f64, t: f64) -> Vec<f64> {
    let xs = grid.xs();
    let us: Vec<f64> = xs[1..].iter().map(|x| x.ln()).collect();
    let ys = &values[1..];
    let d = pchip_slopes(&us, ys);
    let factor = (-t).exp();
    let mut out = Vec::with_capacity(xs.len());
    out.push(values[0]);
    for &x in &xs[1..] {
        let y = x * factor;
        if y <= xs[1] {
            out.push(values[0] + q * y * y);
            continue;
        }
        let u = y.ln();
        let i = (us.partition_point(|&v| v <= u).saturating_sub(1)).min(us.len() - 2);
        out.push(hermite(us[i], us[i + 1], ys[i], ys[i + 1], d[i], d[i + 1], u));
    }
    out
}

/// `T_t F(x) = F(e^{−t} x)`.
pub fn op_t(t: f64, f: &GridFunction) -> Result<GridFunction> {
    if !(t >= 0.0) {
        return Err(Error::domain(t, "t >= 0"));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let mut values = pull_back(f.grid(), f.values(), f.q(), t);
    // Shape-preserving interpolation keeps monotone data monotone up to rounding.
    let mut running = 0.0f64;
    for v in values.iter_mut() {
        running = running.max(v.clamp(0.0, 1.0));
        *v = running;
    }
    let tail = match f.tail() {
        TailModel::Exponential { rate } => TailModel::Exponential { rate: rate * (-t).exp() },
        m => m,
    };
    let last = values[values.len() - 1];
    let tail_value = f.tail_value().max(last);
    Ok(GridFunction::from_values(f.grid(), values, tail_value, tail)?.with_q(f.q() * (-2.0 * t).exp()))
}

/// `T_t` on signed grid data.
pub fn op_t_series(t: f64, s: &GridSeries) -> GridSeries {
    GridSeries { grid: s.grid.clone(), values: pull_back(&s.grid, &s.values, s.q, t), q: s.q * (-2.0 * t).exp() }
}

/// Weights `w_m` with `∫_0^h e^{−s} P'(s) ds = Σ w_m Φ_m`, where `P` is the cubic
/// through the four stencil nodes `(s0 + m) h`.
fn cubic_weights(h: f64, s0: i32) -> [f64; 4] {
    let (gx, gw) = quad::gl8_unit();
    let nodes: [f64; 4] = std::array::from_fn(|m| (s0 + m as i32) as f64 * h);
    let mut w = [0.0; 4];
    for (m, wm) in w.iter_mut().enumerate() {
        for (x, wt) in gx.iter().zip(gw) {
            let s = x * h;
            let mut deriv = 0.0;
            for a in 0..4 {
                if a == m {
                    continue;
                }
                let mut term = 1.0 / (nodes[m] - nodes[a]);
                for b in 0..4 {
                    if b != m && b != a {
                        term *= (s - nodes[b]) / (nodes[m] - nodes[b]);
                    }
                }
                deriv += term;
            }
            *wm += wt * h * (-s).exp() * deriv;
        }
    }
    w
}

/// Computes `J(x) = ∫_x^∞ z⁻¹ dΨ(F(z))` at the positive nodes of a grid.
#[derive(Debug, Clone)]
pub(crate) struct JOperator {
    rule: ChoiceRule,
    xs: Vec<f64>,
    us: Vec<f64>,
    cubic: Option<[[f64; 4]; 3]>,
    kind: TailKind,
}

impl JOperator {
    pub fn new(rule: &ChoiceRule, grid: &Grid) -> Self {
        let xs = grid.xs()[1..].to_vec();
        let us = xs.iter().map(|x| x.ln()).collect();
        let cubic = match (grid.log_step(), rule.has_density() && xs.len() >= 4) {
            (Some(h), true) => Some([cubic_weights(h, 0), cubic_weights(h, -1), cubic_weights(h, -2)]),
            _ => None,
        };
        JOperator { rule: rule.clone(), xs, us, cubic, kind: rule.tail_kind() }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// `J` at the positive nodes for values `f` there, with `F(∞) = tail_value`.
    pub fn j(&self, f: &[f64], tail_value: f64) -> Vec<f64> {
        let n = self.xs.len();
        let phi: Vec<f64> = f.iter().map(|&v| self.rule.cdf_clamped(v)).collect();
        let mut pieces = vec![0.0; n - 1];
        match &self.cubic {
            Some([wl, wi, wr]) => {
                for j in 0..n - 1 {
                    let (w, base) = if j == 0 {
                        (wl, 0)
                    } else if j == n - 2 {
                        (wr, n - 4)
                    } else {
                        (wi, j - 1)
                    };
                    let s = w[0] * phi[base] + w[1] * phi[base + 1] + w[2] * phi[base + 2] + w[3] * phi[base + 3];
                    pieces[j] = s / self.xs[j];
                }
            }
            None => {
                for j in 0..n - 1 {
                    let du = self.us[j + 1] - self.us[j];
                    pieces[j] = (phi[j + 1] - phi[j]) / du * (1.0 / self.xs[j] - 1.0 / self.xs[j + 1]);
                }
            }
        }
        let jn = self.tail_closure(f, tail_value);
        let mut out = vec![0.0; n];
        let mut acc = jn;
        out[n - 1] = acc;
        for j in (0..n - 1).rev() {
            acc += pieces[j];
            out[j] = acc;
        }
        out
    }

    fn complement(&self, v: f64, tail_value: f64) -> f64 {
        if tail_value >= 1.0 {
            self.rule.complement_clamped(v)
        } else {
            self.rule.cdf_clamped(tail_value) - self.rule.cdf_clamped(v)
        }
    }

    /// `∫_{x_N}^∞ z⁻¹ dΨ(F)` from the decay of `Ψ(F(∞)) − Ψ(F)` over the last two nodes.
    fn tail_closure(&self, f: &[f64], tail_value: f64) -> f64 {
        let n = self.xs.len();
        let c1 = self.complement(f[n - 1], tail_value);
        let c0 = self.complement(f[n - 2], tail_value);
        if !(c1 > 0.0 && c0 > c1) {
            return 0.0;
        }
        let xn = self.xs[n - 1];
        match self.kind {
            TailKind::Exponential => {
                let a = (c0 / c1).ln() / (xn - self.xs[n - 2]);
                c1 * a * quad::exp_e1(a * xn)
            }
            TailKind::Power => {
                let p = (c0 / c1).ln() / (self.us[n - 1] - self.us[n - 2]);
                c1 * p / ((p + 1.0) * xn)
            }
            TailKind::Truncated => 0.0,
        }
    }

    /// `𝒜F = x² J` at the positive nodes.
    pub fn a(&self, f: &[f64], tail_value: f64) -> Vec<f64> {
        let mut j = self.j(f, tail_value);
        for (v, x) in j.iter_mut().zip(&self.xs) {
            *v *= x * x;
        }
        j
    }
}

/// `𝒜F(x) = x² ∫_x^∞ z⁻¹ dΨ(F(z))`.
pub fn op_a(rule: &ChoiceRule, f: &GridFunction) -> GridSeries {
    let op = JOperator::new(rule, f.grid());
    let j = op.j(&f.values()[1..], f.tail_value());
    let mut values = Vec::with_capacity(f.values().len());
    values.push(0.0);
    values.extend(j.iter().zip(op.xs()).map(|(j, x)| x * x * j));
    GridSeries { grid: f.grid().clone(), values, q: j[0] }
}

/// `𝒮^Ψ(F)_t = T_t F_0 + ∫_0^t T_{t−s} 𝒜F_s ds`, composite trapezoid over the
/// stored frames; a frame at `t` itself is interpolated linearly in time.
pub fn op_s(rule: &ChoiceRule, traj: &Trajectory, t: f64) -> Result<GridSeries> {
    if t > traj.end() * (1.0 + 1e-12) {
        return Err(Error::BeyondTrajectory { t, end: traj.end() });
    }
    if t < 0.0 {
        return Err(Error::domain(t, "t >= 0"));
    }
    let f0 = &traj.frames[0];
    let base = pull_back(f0.grid(), f0.values(), f0.q(), t);
    if t == 0.0 {
        return Ok(GridSeries { grid: f0.grid().clone(), values: f0.values().to_vec(), q: f0.q() });
    }
    let mut nodes: Vec<(f64, GridSeries)> = Vec::new();
    for (s, frame) in traj.times.iter().zip(&traj.frames) {
        if *s < t - 1e-12 {
            nodes.push((*s, op_a(rule, frame)));
        }
    }
    let k = traj.times.partition_point(|&s| s < t - 1e-12);
    let at_t = if k < traj.times.len() && (traj.times[k] - t).abs() <= 1e-12 {
        op_a(rule, &traj.frames[k])
    } else {
        let (s0, s1) = (traj.times[k - 1], traj.times[k]);
        let w = (t - s0) / (s1 - s0);
        let (a, b) = (&traj.frames[k - 1], &traj.frames[k]);
        let values: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| (1.0 - w) * x + w * y).collect();
        let tail_value = (1.0 - w) * a.tail_value() + w * b.tail_value();
        let mid = GridFunction::from_values(a.grid(), values, tail_value, a.tail())?;
        op_a(rule, &mid)
    };
    nodes.push((t, at_t));
    let mut out = base;
    let mut out_q = f0.q() * (-2.0 * t).exp();
    for w in nodes.windows(2) {
        let (s0, a0) = (&w[0].0, &w[0].1);
        let (s1, a1) = (&w[1].0, &w[1].1);
        let ds = s1 - s0;
        let p0 = op_t_series(t - s0, a0);
        let p1 = op_t_series(t - s1, a1);
        for ((o, x), y) in out.iter_mut().zip(&p0.values).zip(&p1.values) {
            *o += 0.5 * ds * (x + y);
        }
        out_q += 0.5 * ds * (p0.q + p1.q);
    }
    Ok(GridSeries { grid: f0.grid().clone(), values: out, q: out_q })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid40() -> Grid {
        Grid::solver_default(40.0).unwrap()
    }

    #[test]
    fn cubic_weights_reproduce_cubics() {
        let h = 0.01;
        for s0 in [0, -1, -2] {
            let w = cubic_weights(h, s0);
            // P(s) = s^3 - 2s: ∫_0^h e^{-s}(3s^2 - 2) ds
            let phi: Vec<f64> = (0..4)
                .map(|m| {
                    let s = (s0 + m) as f64 * h;
                    s * s * s - 2.0 * s
                })
                .collect();
            let got: f64 = (0..4).map(|m| w[m] * phi[m]).sum();
            let exact = quad::integrate(|s| (-s).exp() * (3.0 * s * s - 2.0), 0.0, h, 1);
            assert!((got - exact).abs() < 1e-14, "{s0}: {got} vs {exact}");
        }
    }

    #[test]
    fn t_identity_and_kakutani_rescaling() {
        let g = grid40();
        let f = GridFunction::kakutani_limit(&g);
        assert_eq!(op_t(0.0, &f).unwrap(), f);
        let shifted = op_t(std::f64::consts::LN_2, &f).unwrap();
        for (&x, &v) in g.xs().iter().zip(shifted.values()) {
            let exact = (x * x / 16.0).min(1.0);
            // the kink at x = 4 is smoothed over one segment
            let tol = if (x - 4.0).abs() < 0.05 { 2e-4 } else { 2e-6 };
            assert!((v - exact).abs() < tol, "x={x}: {v} vs {exact}");
        }
        assert!((shifted.q() - 0.25 / 4.0).abs() < 1e-15);
        assert!(op_t(-1.0, &f).is_err());
    }

    #[test]
    fn a_uniform_matches_analytic() {
        let g = grid40();
        let f = GridFunction::size_biased_exponential(&g);
        let a = op_a(&ChoiceRule::Uniform, &f);
        let mut worst: f64 = 0.0;
        for (&x, &v) in g.xs().iter().zip(&a.values) {
            if (0.1..=10.0).contains(&x) {
                let exact = x * x * (-x).exp();
                worst = worst.max(((v - exact) / exact).abs());
            }
        }
        assert!(worst <= 1e-4, "max relative error {worst}");
    }

    #[test]
    fn a_of_zero_is_zero() {
        let g = grid40();
        let f = GridFunction::from_values(&g, vec![0.0; g.len()], 0.0, TailModel::Truncated).unwrap();
        for rule in [ChoiceRule::MaxK(2), ChoiceRule::Uniform, ChoiceRule::Kakutani] {
            assert!(op_a(&rule, &f).values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn a_kakutani_is_half_x_squared_below_two() {
        let g = grid40();
        let f = GridFunction::kakutani_limit(&g);
        let a = op_a(&ChoiceRule::Kakutani, &f);
        for (&x, &v) in g.xs().iter().zip(&a.values) {
            if x > 0.0 && x < 1.99 {
                assert!(((v - 0.5 * x * x) / (0.5 * x * x)).abs() < 5e-3, "x={x}: {v}");
            }
            if x > 2.01 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn pchip_keeps_monotone_data_monotone() {
        let u: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = u.iter().map(|&x| if x < 2.0 { 0.0 } else { (x - 2.0).min(1.0) }).collect();
        let d = pchip_slopes(&u, &y);
        let mut last = f64::NEG_INFINITY;
        for i in 0..49 {
            for k in 0..10 {
                let s = u[i] + 0.01 * k as f64;
                let v = hermite(u[i], u[i + 1], y[i], y[i + 1], d[i], d[i + 1], s);
                assert!(v >= last - 1e-15);
                last = v;
            }
        }
    }
}
