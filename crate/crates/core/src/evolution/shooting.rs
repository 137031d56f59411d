//! Shooting on `F' = xJ`, `J' = −ψ(F) J`, the first-order form of
//! `xF'' − F' + xF'ψ(F) = 0`, with the curvature `c = F''(0⁺) = J(0)` as parameter.

use super::fixed_point::{finish_profile, normalization, Method, SolveReport};
use super::grid::{Grid, GridFunction};
use crate::error::{Error, Result};
use crate::ode::Dopri;
use crate::psi::{ChoiceRule, TailKind};

struct Shot {
    f: Vec<f64>,
    j: Vec<f64>,
    /// Estimated `F(∞)`; infinite once `F` has crossed 1 on the grid.
    limit: f64,
}

fn shoot(rule: &ChoiceRule, xs: &[f64], c: f64) -> Result<Shot> {
    let psi = |v: f64| rule.density_clamped(v.min(1.0)).unwrap_or(0.0);
    let p0 = psi(0.0);
    let x0 = xs[0];
    let mut y = [c * (0.5 * x0 * x0 - p0 * x0 * x0 * x0 / 3.0), c * (1.0 - p0 * x0)];
    let mut f = Vec::with_capacity(xs.len());
    let mut j = Vec::with_capacity(xs.len());
    f.push(y[0]);
    j.push(y[1]);
    let dopri = Dopri::default();
    let mut h = 0.0;
    let rhs = |u: f64, y: &[f64; 2]| {
        let x = u.exp();
        [x * x * y[1], -x * psi(y[0]) * y[1]]
    };
    for w in xs.windows(2) {
        y = dopri.integrate(rhs, w[0].ln(), y, w[1].ln(), &mut h, |_, _| false)?.y;
        if y[0] > 1.0 + 1e-6 || !y[0].is_finite() {
            return Ok(Shot { f, j, limit: f64::INFINITY });
        }
        f.push(y[0]);
        j.push(y[1]);
    }
    let n = xs.len();
    let (xn, fn_, jn) = (xs[n - 1], f[n - 1], j[n - 1]);
    let lambda = psi(fn_);
    let closure = match rule.tail_kind() {
        TailKind::Exponential if lambda > 0.0 => jn * (xn / lambda + 1.0 / (lambda * lambda)),
        _ => {
            let m = xn * lambda;
            if m > 2.0 {
                jn * xn * xn / (m - 2.0)
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(Shot { f, j, limit: fn_ + closure })
}

/// Solves for `F^Ψ` by bisection on `ln c` until `|F(∞) − 1| ≤ tol`.
pub fn ode_solve(rule: &ChoiceRule, grid: &Grid, tol: f64) -> Result<(GridFunction, SolveReport)> {
    if !rule.has_density() {
        return Err(Error::NoDensity(rule.to_string()));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(tol, "tol > 0"));
    }
    let xs = &grid.xs()[1..];
    let miss = |c: f64| -> Result<(f64, Shot)> {
        let s = shoot(rule, xs, c)?;
        Ok((s.limit - 1.0, s))
    };
    let mut trace = Vec::new();
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let (r, _) = miss(1.0)?;
    trace.push(r.abs());
    let mut expansions = 0;
    if r > 0.0 {
        loop {
            lo /= 2.0;
            let (r, _) = miss(lo)?;
            trace.push(r.abs());
            if r <= 0.0 {
                break;
            }
            expansions += 1;
            if expansions > 80 {
                return Err(Error::Bracketing(format!("F(∞) > 1 even for c = {lo:e}")));
            }
        }
    } else {
        loop {
            hi *= 2.0;
            let (r, _) = miss(hi)?;
            trace.push(r.abs());
            if r > 0.0 {
                break;
            }
            expansions += 1;
            if expansions > 80 {
                return Err(Error::Bracketing(format!("F(∞) < 1 even for c = {hi:e}")));
            }
        }
    }
    let mut best: Option<(f64, f64, Shot)> = None;
    for _ in 0..200 {
        let c = (lo * hi).sqrt();
        let (r, shot) = miss(c)?;
        trace.push(r.abs());
        if r > 0.0 {
            hi = c;
        } else {
            lo = c;
        }
        let better = best.as_ref().is_none_or(|b| r.abs() < b.1.abs());
        if better && r.is_finite() {
            best = Some((c, r, shot));
        }
        if r.abs() <= tol || hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
    }
    let (c, r, shot) = best.ok_or_else(|| Error::Bracketing("no finite shot".into()))?;
    if r.abs() > tol.max(1e-9) {
        return Err(Error::NonConvergence { iterations: trace.len(), residual: r.abs() });
    }
    let (profile, tail_value, tail) = finish_profile(rule, grid, &shot.f, &shot.j)?;
    let (candy, mass, drift) = normalization(rule, &profile)?;
    let report = SolveReport {
        rule: rule.to_string(),
        method: Method::Shoot,
        grid_points: grid.len() - 1,
        x_min: grid.x_min(),
        x_max: grid.x_max(),
        tol,
        converged: true,
        iterations: trace.len(),
        residual_trace: trace,
        sweep_time: None,
        curvature: Some(c),
        candy_norm: candy,
        mass,
        drift,
        tail_value,
        tail,
    };
    Ok((profile, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_curvature_is_one() {
        let g = Grid::solver_default(40.0).unwrap();
        let (f, rep) = ode_solve(&ChoiceRule::Uniform, &g, 1e-10).unwrap();
        assert!((rep.curvature.unwrap() - 1.0).abs() < 1e-6, "{:?}", rep.curvature);
        for (&x, &v) in g.xs().iter().zip(f.values()) {
            assert!((v - (1.0 - (1.0 + x) * (-x).exp())).abs() < 1e-7);
        }
    }

    #[test]
    fn kakutani_has_no_density() {
        let g = Grid::solver_default(40.0).unwrap();
        assert!(matches!(ode_solve(&ChoiceRule::Kakutani, &g, 1e-10), Err(Error::NoDensity(_))));
    }
}
