//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri {
    fn default() -> Self {
        Dopri { rtol: 1e-12, atol: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// The `stop` predicate fired before `t1` was reached.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl Dopri {
    /// Integrates `y' = f(t, y)` from `t0` to `t1`. `h` carries the step size
    /// between calls; `stop` is checked after every accepted step.
    pub fn integrate<const N: usize, F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        h: &mut f64,
        mut stop: S,
    ) -> Result<Outcome<N>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        S: FnMut(f64, &[f64; N]) -> bool,
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(Outcome { t: t0, y: y0, stopped: false });
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        if *h == 0.0 || !h.is_finite() {
            *h = span.abs() * 1e-3;
        }
        let mut k1 = f(t, &y);
        for _ in 0..self.max_steps {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                return Ok(Outcome { t: t1, y, stopped: false });
            }
            let last = h.abs() >= remaining;
            let step = if last { remaining * dir } else { h.abs() * dir };

            let k2 = f(t + C2 * step, &axpy(&y, &[(A21, &k1)], step));
            let k3 = f(t + C3 * step, &axpy(&y, &[(A31, &k1), (A32, &k2)], step));
            let k4 = f(t + C4 * step, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], step));
            let k5 = f(t + C5 * step, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], step));
            let k6 = f(t + step, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], step));
            let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], step);
            let k7 = f(t + step, &y_new);

            let mut err: f64 = 0.0;
            for i in 0..N {
                let e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                *h = step.abs() * 0.1;
                if *h < 1e-300 {
                    return Err(Error::NonConvergence { iterations: 0, residual: f64::NAN });
                }
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { t1 } else { t + step };
                y = y_new;
                k1 = k7;
                if !last || factor < 1.0 {
                    *h = step.abs() * factor;
                }
                if stop(t, &y) {
                    return Ok(Outcome { t, y, stopped: true });
                }
                if last {
                    return Ok(Outcome { t, y, stopped: false });
                }
            } else {
                *h = step.abs() * factor;
            }
        }
        Err(Error::NonConvergence { iterations: self.max_steps, residual: f64::NAN })
    }
}
