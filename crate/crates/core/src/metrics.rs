//! Norms, distances and functionals of grid functions.
//!
//! Interiors are integrated in closed form for the piecewise-linear
//! interpolant, or with Gauss–Legendre on the cubic Hermite interpolant when
//! exact node slopes are attached. `[0, x_1]` uses the quadratic model and the
//! region beyond the grid uses the tail model.

use crate::error::{Error, Result};
use crate::evolution::{ops, GridFunction, TailModel};
use crate::psi::ChoiceRule;
use crate::quad;

pub const L1LOC_TERMS: usize = 30;

/// `∫_a^b x⁻² (f_a + β (x − a)) dx` for a linear piece.
fn linear_candy(a: f64, b: f64, fa: f64, fb: f64) -> f64 {
    let beta = (fb - fa) / (b - a);
    let d = (b - a) / a;
    fa * (1.0 / a - 1.0 / b) + beta * (d.ln_1p() - d / (1.0 + d))
}

/// `∫_a^b x⁻² |f|` for linear `f`, split at its root.
fn linear_candy_abs(a: f64, b: f64, fa: f64, fb: f64) -> f64 {
    if fa * fb >= 0.0 {
        return linear_candy(a, b, fa, fb).abs();
    }
    let r = a + fa / (fa - fb) * (b - a);
    linear_candy(a, r, fa, 0.0).abs() + linear_candy(r, b, 0.0, fb).abs()
}

fn check_origin(f: &GridFunction) -> Result<()> {
    if f.values()[0] != 0.0 {
        return Err(Error::Divergent(format!("F(0) = {} leaves mass at the origin", f.values()[0])));
    }
    Ok(())
}

fn same_grid(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `∫_{x_N}^∞ x⁻² |F − G|`, by the substitution `x = x_N / s`.
fn tail_candy_diff(f: &GridFunction, g: &GridFunction) -> f64 {
    let xn = *f.xs().last().unwrap();
    quad::integrate(|s| if s <= 0.0 { 0.0 } else { (f.eval(xn / s) - g.eval(xn / s)).abs() / xn }, 0.0, 1.0, 32)
}

/// `∫_{x_N}^∞ x⁻² F`.
fn tail_candy(f: &GridFunction) -> f64 {
    let xn = *f.xs().last().unwrap();
    let base = f.tail_value() / xn;
    match f.tail() {
        TailModel::Truncated => f.last() / xn,
        TailModel::Exponential { rate } => base - f.gap() * (1.0 / xn - rate * quad::exp_e1(rate * xn)),
        TailModel::Power { exponent } => base - f.gap() / ((exponent + 1.0) * xn),
    }
}

/// Hermite data on segment `i` (`x_i` to `x_{i+1}`, both positive nodes).
fn hermite_at(f: &GridFunction, slopes: &[f64], i: usize, x: f64) -> (f64, f64) {
    let xs = f.xs();
    let v = f.values();
    let y = ops::hermite(xs[i], xs[i + 1], v[i], v[i + 1], slopes[i], slopes[i + 1], x);
    let d = ops::hermite_deriv(xs[i], xs[i + 1], v[i], v[i + 1], slopes[i], slopes[i + 1], x);
    (y, d)
}

/// Sum over interior segments of `∫ g(x, F, F') dx` (Hermite, 8-point rule).
fn hermite_interior<G: Fn(f64, f64, f64) -> f64>(f: &GridFunction, slopes: &[f64], g: G) -> f64 {
    let (gx, gw) = quad::gl8_unit();
    let xs = f.xs();
    let mut total = 0.0;
    for i in 1..xs.len() - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        let mut s = 0.0;
        for (t, w) in gx.iter().zip(gw) {
            let x = a + t * (b - a);
            let (y, d) = hermite_at(f, slopes, i, x);
            s += w * g(x, y, d);
        }
        total += s * (b - a);
    }
    total
}

/// `∫_0^∞ x⁻² |F(x)| dx`.
pub fn candy_norm(f: &GridFunction) -> Result<f64> {
    check_origin(f)?;
    let xs = f.xs();
    let v = f.values();
    let near = f.q().abs() * xs[1];
    let interior = match f.slopes() {
        Some(sl) => hermite_interior(f, sl, |x, y, _| y.abs() / (x * x)),
        None => (1..xs.len() - 1).map(|i| linear_candy_abs(xs[i], xs[i + 1], v[i], v[i + 1])).sum(),
    };
    Ok(near + interior + tail_candy(f))
}

/// `d_{x⁻²}(F, G) = ∫_0^∞ x⁻² |F − G| dx` on a common grid.
pub fn d_candy(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    same_grid(f, g)?;
    check_origin(f)?;
    check_origin(g)?;
    let xs = f.xs();
    let (a, b) = (f.values(), g.values());
    let near = (f.q() - g.q()).abs() * xs[1];
    let interior: f64 =
        (1..xs.len() - 1).map(|i| linear_candy_abs(xs[i], xs[i + 1], a[i] - b[i], a[i + 1] - b[i + 1])).sum();
    let tail = match (f.tail(), g.tail()) {
        (TailModel::Truncated, TailModel::Truncated) => (f.last() - g.last()).abs() / xs[xs.len() - 1],
        _ => tail_candy_diff(f, g),
    };
    Ok(near + interior + tail)
}

/// `Σ_{k=1}^{30} 2^{−k} ∧ ∫_0^k |F − G|`, exact for the linear interpolants.
pub fn d_l1loc(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    same_grid(f, g)?;
    let xs = f.xs();
    let kmax = L1LOC_TERMS as f64;
    let mut pts: Vec<f64> = xs.iter().copied().filter(|&x| x < kmax).collect();
    pts.extend((1..=L1LOC_TERMS).map(|k| k as f64));
    let xn = xs[xs.len() - 1];
    if xn < kmax {
        let mut x = xn;
        while x < kmax {
            pts.push(x);
            x += 1.0 / 64.0;
        }
    }
    // near zero both are quadratic; sample densely enough to be exact to rounding
    for j in 1..16 {
        pts.push(xs[1] * j as f64 / 16.0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let diff: Vec<f64> = pts.iter().map(|&x| f.eval(x) - g.eval(x)).collect();
    let mut cumulative = 0.0;
    let mut next_k = 1usize;
    let mut total = 0.0;
    for i in 0..pts.len() - 1 {
        let (a, b) = (pts[i], pts[i + 1]);
        let (fa, fb) = (diff[i], diff[i + 1]);
        cumulative += if fa * fb >= 0.0 {
            0.5 * (fa.abs() + fb.abs()) * (b - a)
        } else {
            let r = a + fa / (fa - fb) * (b - a);
            0.5 * (fa.abs() * (r - a) + fb.abs() * (b - r))
        };
        while next_k <= L1LOC_TERMS && b >= next_k as f64 {
            total += (0.5f64).powi(next_k as i32).min(cumulative);
            next_k += 1;
        }
    }
    Ok(total)
}

/// `∫_0^∞ F'(x)/x dx`, the mass of the underlying probability measure.
pub fn mass_integral(f: &GridFunction) -> Result<f64> {
    check_origin(f)?;
    let xs = f.xs();
    let v = f.values();
    let xn = xs[xs.len() - 1];
    let near = 2.0 * f.q() * xs[1];
    let interior = match f.slopes() {
        Some(sl) => hermite_interior(f, sl, |x, _, d| d / x),
        None => (1..xs.len() - 1).map(|i| (v[i + 1] - v[i]) / (xs[i + 1] - xs[i]) * (xs[i + 1] / xs[i]).ln()).sum(),
    };
    let tail = match f.tail() {
        TailModel::Truncated => 0.0,
        TailModel::Exponential { rate } => f.gap() * rate * quad::exp_e1(rate * xn),
        TailModel::Power { exponent } => f.gap() * exponent / ((exponent + 1.0) * xn),
    };
    Ok(near + interior + tail)
}

/// `H(F) = ∫_0^∞ ln x dF(x)`.
pub fn entropy_of(f: &GridFunction) -> Result<f64> {
    if f.values()[0] != 0.0 {
        return Err(Error::Divergent("mass at the origin has entropy −∞".into()));
    }
    let xs = f.xs();
    let v = f.values();
    let xn = xs[xs.len() - 1];
    let x1 = xs[1];
    let near = f.q() * x1 * x1 * (x1.ln() - 0.5);
    let xlx = |x: f64| x * x.ln() - x;
    let interior = match f.slopes() {
        Some(sl) => hermite_interior(f, sl, |x, _, d| x.ln() * d),
        None => {
            (1..xs.len() - 1).map(|i| (v[i + 1] - v[i]) / (xs[i + 1] - xs[i]) * (xlx(xs[i + 1]) - xlx(xs[i]))).sum()
        }
    };
    let tail = match f.tail() {
        TailModel::Truncated => 0.0,
        TailModel::Exponential { rate } => f.gap() * (xn.ln() + quad::exp_e1(rate * xn)),
        TailModel::Power { exponent } => f.gap() * (xn.ln() + 1.0 / exponent),
    };
    Ok(near + interior + tail)
}

/// `D(F) = ½ ∫_0^∞ z dΨ(F(z))`.
pub fn drift_d(rule: &ChoiceRule, f: &GridFunction) -> Result<f64> {
    let xs = f.xs();
    let v = f.values();
    let n = xs.len() - 1;
    let phi = |u: f64| rule.cdf_clamped(u);
    let near = 2.0 / 3.0 * xs[1] * (phi(v[1]) - phi(v[0]));
    let interior = match (f.slopes(), rule.has_density()) {
        (Some(sl), true) => hermite_interior(f, sl, |x, y, d| x * rule.density_clamped(y).unwrap_or(0.0) * d),
        _ => (1..n).map(|i| (phi(v[i + 1]) - phi(v[i])) * (xs[i + 1] - xs[i]) / (xs[i + 1] / xs[i]).ln()).sum(),
    };
    // Ψ(F(∞)) − Ψ(F) beyond the grid, extrapolated from the last two nodes.
    let top = f.tail_value();
    let comp = |u: f64| if top >= 1.0 { rule.complement_clamped(u) } else { phi(top) - phi(u) };
    let (c0, c1) = (comp(v[n - 1]), comp(v[n]));
    let tail = if f.tail() == TailModel::Truncated || !(c1 > 1e-13) {
        0.0
    } else if !(c0 > c1) {
        return Err(Error::Divergent("Ψ∘F does not decay at the grid end".into()));
    } else {
        match f.tail() {
            TailModel::Exponential { .. } => {
                let a = (c0 / c1).ln() / (xs[n] - xs[n - 1]);
                c1 * (xs[n] + 1.0 / a)
            }
            _ => {
                let p = (c0 / c1).ln() / (xs[n] / xs[n - 1]).ln();
                if p <= 1.0 {
                    return Err(Error::Divergent(format!("Ψ∘F tail exponent {p} <= 1")));
                }
                c1 * p * xs[n] / (p - 1.0)
            }
        }
    };
    Ok(0.5 * (near + interior + tail))
}

/// `sup |F − G|` over the nodes of both grids.
pub fn ks_distance(f: &GridFunction, g: &GridFunction) -> f64 {
    if f.grid() == g.grid() {
        return f.values().iter().zip(g.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    }
    f.xs().iter().chain(g.xs()).map(|&x| (f.eval(x) - g.eval(x)).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Grid;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::solver_default(40.0).unwrap()
    }

    fn zero(g: &Grid) -> GridFunction {
        GridFunction::from_values(g, vec![0.0; g.len()], 0.0, TailModel::Truncated).unwrap()
    }

    #[test]
    fn candy_examples() {
        let g = grid();
        let k = GridFunction::kakutani_limit(&g);
        assert!((candy_norm(&k).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(candy_norm(&zero(&g)).unwrap(), 0.0);
        let e = GridFunction::size_biased_exponential(&g);
        assert!((candy_norm(&e).unwrap() - 1.0).abs() < 1e-6);
        assert!((d_candy(&k, &zero(&g)).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(d_candy(&k, &k).unwrap(), 0.0);
    }

    #[test]
    fn candy_divergence_reported() {
        let g = grid();
        let one = GridFunction::from_values(&g, vec![1.0; g.len()], 1.0, TailModel::Truncated).unwrap();
        assert!(matches!(candy_norm(&one), Err(Error::Divergent(_))));
    }

    #[test]
    fn linear_candy_piece_matches_quadrature() {
        let (a, b, fa, fb) = (0.7, 1.3, -0.2, 0.5);
        let r = a + fa / (fa - fb) * (b - a);
        let g = |x: f64| (fa + (fb - fa) * (x - a) / (b - a)).abs() / (x * x);
        let exact = quad::integrate(g, a, r, 4) + quad::integrate(g, r, b, 4);
        assert!((linear_candy_abs(a, b, fa, fb) - exact).abs() < 1e-9);
    }

    #[test]
    fn l1loc_examples() {
        let g = grid();
        let one = GridFunction::from_values(&g, vec![1.0; g.len()], 1.0, TailModel::Truncated).unwrap();
        let z = zero(&g);
        assert_eq!(d_l1loc(&z, &z).unwrap(), 0.0);
        let d = d_l1loc(&one, &z).unwrap();
        assert!((d - (1.0 - 0.5f64.powi(30))).abs() < 1e-12, "{d}");
        let k = GridFunction::kakutani_limit(&g);
        let e = GridFunction::size_biased_exponential(&g);
        let dl = d_l1loc(&k, &e).unwrap();
        let dc = d_candy(&k, &e).unwrap();
        for kk in [1i32, 3, 10] {
            assert!(dl <= 0.5f64.powi(kk) + (kk * kk) as f64 * dc);
        }
    }

    #[test]
    fn entropy_examples() {
        let g = grid();
        let e = GridFunction::size_biased_exponential(&g);
        assert!((entropy_of(&e).unwrap() - 0.422_784_335_098_467_1).abs() < 1e-6);
        let k = GridFunction::kakutani_limit(&g);
        let h = entropy_of(&k).unwrap();
        // ∫_0^2 ln x · x/2 dx = ln 2 − 1/2
        let exact = std::f64::consts::LN_2 - 0.5;
        let check = quad::integrate(|s| -s * (-2.0 * s).exp() / 2.0, 0.0, 60.0, 64)
            + quad::integrate(|x| x.ln() * x / 2.0, 1.0, 2.0, 8);
        assert!((exact - check).abs() < 1e-12, "{check}");
        assert!((h - exact).abs() < 1e-5, "{h}");
        let steps = Grid::from_nodes(vec![0.0, 0.5, 1.0, 1.0 + 1e-9, 2.0]).unwrap();
        let point = GridFunction::from_values(&steps, vec![0.0, 0.0, 0.0, 1.0, 1.0], 1.0, TailModel::Truncated)
            .unwrap()
            .with_q(0.0);
        assert!(entropy_of(&point).unwrap().abs() < 1e-8);
    }

    #[test]
    fn drift_examples() {
        let g = grid();
        let e = GridFunction::size_biased_exponential(&g);
        assert!((drift_d(&ChoiceRule::Uniform, &e).unwrap() - 1.0).abs() < 1e-6);
        let one = GridFunction::from_values(&g, vec![1.0; g.len()], 1.0, TailModel::Truncated).unwrap();
        assert_eq!(drift_d(&ChoiceRule::Uniform, &one).unwrap(), 0.0);
    }

    #[test]
    fn mass_of_size_biased_exponential() {
        let g = grid();
        let e = GridFunction::size_biased_exponential(&g);
        assert!((mass_integral(&e).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ks_examples() {
        let g = Grid::from_nodes(vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0]).unwrap();
        let s1 = GridFunction::from_values(&g, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0], 1.0, TailModel::Truncated).unwrap();
        let s2 = GridFunction::from_values(&g, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0], 1.0, TailModel::Truncated).unwrap();
        assert_eq!(ks_distance(&s1, &s1), 0.0);
        assert_eq!(ks_distance(&s1, &s2), 1.0);
        let e = GridFunction::size_biased_exponential(&Grid::geometric(1e-3, 20.0, 64).unwrap());
        let k = GridFunction::kakutani_limit(&Grid::geometric(1e-3, 20.0, 64).unwrap());
        let fine_e = GridFunction::size_biased_exponential(&Grid::geometric(1e-3, 20.0, 127).unwrap());
        let fine_k = GridFunction::kakutani_limit(&Grid::geometric(1e-3, 20.0, 127).unwrap());
        // the 127-point grid contains the 64-point one
        assert!(ks_distance(&fine_e, &fine_k) >= ks_distance(&e, &k));
    }

    fn monotone(g: &Grid) -> impl Strategy<Value = GridFunction> {
        let n = g.len();
        let g = g.clone();
        proptest::collection::vec(0.0f64..1.0, n - 1).prop_map(move |mut inc| {
            let total: f64 = inc.iter().sum::<f64>() * 1.25 + 1e-9;
            inc.iter_mut().for_each(|v| *v /= total);
            let mut values = vec![0.0];
            let mut acc = 0.0;
            for v in inc {
                acc += v;
                values.push(acc.min(1.0));
            }
            GridFunction::from_values(&g, values, 1.0, TailModel::Truncated).unwrap()
        })
    }

    proptest! {
        #[test]
        fn distances_are_metrics(
            (f, g, h) in {
                let grid = Grid::geometric(1e-2, 30.0, 40).unwrap();
                (monotone(&grid), monotone(&grid), monotone(&grid))
            }
        ) {
            for d in [d_candy, d_l1loc] {
                let fg = d(&f, &g).unwrap();
                prop_assert!((fg - d(&g, &f).unwrap()).abs() <= 1e-12 * fg.max(1.0));
                prop_assert_eq!(d(&f, &f).unwrap(), 0.0);
                prop_assert!(fg <= d(&f, &h).unwrap() + d(&h, &g).unwrap() + 1e-12);
            }
            let k = ks_distance(&f, &g);
            prop_assert!(k <= ks_distance(&f, &h) + ks_distance(&h, &g) + 1e-15);
            prop_assert!(d_candy(&f, &g).unwrap() <= candy_norm(&f).unwrap() + candy_norm(&g).unwrap() + 1e-12);
        }
    }
}
