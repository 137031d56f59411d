//! Phase plane of the min-k tail. With `x = e^{(k−1)t}` and
//! `G(t) = e^{t}(1 − F(x))`, the profile equation becomes the autonomous system
//!
//! `G' = H`, `H' = H + (2k − 1 − k(k − 1) G^{k−1})(H − G)`,
//!
//! whose origin is an unstable node (eigenvalues 1 and 2k − 1) and whose
//! saddle `(c_k, 0)` with `c_k = ((2k − 1)/(k(k − 1)))^{1/(k−1)}` carries the tail constant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::Dopri;

const X0: f64 = 1e-4;
const ESCAPE: f64 = 1e6;

/// `((2k − 1)/(k(k − 1)))^{1/(k−1)}`.
pub fn c_k(k: f64) -> f64 {
    ((2.0 * k - 1.0) / (k * (k - 1.0))).powf(1.0 / (k - 1.0))
}

/// Right-hand side `(G', H')` of the planar system.
pub fn vector_field(k: f64, g: f64, h: f64) -> (f64, f64) {
    let gk = if g > 0.0 { g.powf(k - 1.0) } else { 0.0 };
    (h, h + (2.0 * k - 1.0 - k * (k - 1.0) * gk) * (h - g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseResult {
    pub k: f64,
    /// `G` where the best orbit comes closest to rest, `min |H|/G`.
    pub g_infinity: f64,
    pub c_k: f64,
    /// Curvature `F''(0⁺)` selecting the orbit that lands on the saddle.
    pub curvature: f64,
    /// `(t, G, H)` along the best orbit.
    pub trace: Vec<(f64, f64, f64)>,
}

#[derive(Debug, PartialEq)]
enum Fate {
    /// `G` turned negative: `1 − F` vanished, the curvature is too large.
    Crossed,
    /// The orbit escaped to infinity: the curvature is too small.
    Escaped,
}

fn orbit(k: f64, c: f64, horizon: f64, keep: bool) -> Result<(Fate, Vec<(f64, f64, f64)>)> {
    let t0 = X0.ln() / (k - 1.0);
    let f0 = c * (0.5 * X0 * X0 - k * X0 * X0 * X0 / 3.0);
    let d0 = c * (X0 - k * X0 * X0);
    let e = t0.exp();
    let g0 = e * (1.0 - f0);
    let h0 = g0 - (k - 1.0) * e * X0 * d0;
    let mut trace = vec![(t0, g0, h0)];
    let mut step = 0.0;
    let dopri = Dopri { rtol: 1e-12, atol: 1e-15, max_steps: 2_000_000 };
    let out = dopri.integrate(
        |_, y: &[f64; 2]| {
            let (a, b) = vector_field(k, y[0], y[1]);
            [a, b]
        },
        t0,
        [g0, h0],
        horizon,
        &mut step,
        |t, y| {
            if keep {
                trace.push((t, y[0], y[1]));
            }
            y[0] < 0.0 || y[0].abs() > ESCAPE || y[1].abs() > ESCAPE
        },
    )?;
    let fate = if out.y[0] < 0.0 {
        Fate::Crossed
    } else if out.stopped {
        Fate::Escaped
    } else if out.y[1] < 0.0 {
        Fate::Crossed
    } else {
        Fate::Escaped
    };
    Ok((fate, trace))
}

/// Shoots from the origin for the orbit ending on the saddle and returns its limit `G(∞)`.
pub fn min_k_phase(k: f64, horizon: f64) -> Result<PhaseResult> {
    if !(k > 1.0) || !k.is_finite() {
        return Err(Error::domain(k, "k > 1"));
    }
    let t0 = X0.ln() / (k - 1.0);
    if !(horizon > t0 + 1.0) {
        return Err(Error::domain(horizon, "horizon beyond the start time"));
    }
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    if orbit(k, 1.0, horizon, false)?.0 == Fate::Crossed {
        loop {
            lo /= 2.0;
            if orbit(k, lo, horizon, false)?.0 == Fate::Escaped {
                break;
            }
            if lo < 1e-30 {
                return Err(Error::Bracketing("no escaping orbit".into()));
            }
        }
    } else {
        loop {
            hi *= 2.0;
            if orbit(k, hi, horizon, false)?.0 == Fate::Crossed {
                break;
            }
            if hi > 1e30 {
                return Err(Error::Bracketing("no crossing orbit".into()));
            }
        }
    }
    for _ in 0..200 {
        let c = 0.5 * (lo + hi);
        if c <= lo || c >= hi {
            break;
        }
        match orbit(k, c, horizon, false)?.0 {
            Fate::Crossed => hi = c,
            Fate::Escaped => lo = c,
        }
    }
    let (_, trace) = orbit(k, lo, horizon, true)?;
    let (_, g_inf, _) = trace
        .iter()
        .filter(|p| p.1 > 0.0)
        .min_by(|a, b| (a.2.abs() / a.1).total_cmp(&(b.2.abs() / b.1)))
        .copied()
        .ok_or(Error::Refinement { violation: f64::NAN, budget: 0.0 })?;
    Ok(PhaseResult { k, g_infinity: g_inf, c_k: c_k(k), curvature: lo, trace })
}
