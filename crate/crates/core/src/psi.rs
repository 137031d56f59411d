//! Choice rules: the law `dΨ` on `(0, 1]` from which the size-biased rank of
//! the interval to split is drawn.
//!
//! Every rule exposes its distribution function, the generalized inverse
//! `inf{u : Ψ(u) ≥ w}` used for sampling, and (when absolutely continuous)
//! its density `ψ`.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Piecewise-linear distribution function through `(u, Ψ(u))` knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    us: Vec<f64>,
    ps: Vec<f64>,
}

impl Tabulated {
    /// Knots must be strictly increasing in `u`, nondecreasing in `Ψ`, and end
    /// at `(1, 1)`. A knot at `(0, 0)` is implied when the first `u` is positive.
    pub fn new(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidRule("table has no knots".into()));
        }
        let mut us = Vec::with_capacity(knots.len() + 1);
        let mut ps = Vec::with_capacity(knots.len() + 1);
        if knots[0].0 > 0.0 {
            us.push(0.0);
            ps.push(0.0);
        }
        for &(u, p) in knots {
            if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidRule(format!("knot ({u}, {p}) outside [0,1]^2")));
            }
            if let (Some(&lu), Some(&lp)) = (us.last(), ps.last()) {
                if u <= lu {
                    return Err(Error::InvalidRule(format!("knot u={u} not strictly increasing")));
                }
                if p < lp {
                    return Err(Error::InvalidRule(format!("knot Ψ={p} decreases")));
                }
            }
            us.push(u);
            ps.push(p);
        }
        if ps[0] != 0.0 {
            return Err(Error::InvalidRule("Ψ(0) must be 0 for a law on (0,1]".into()));
        }
        if *us.last().unwrap() != 1.0 || *ps.last().unwrap() != 1.0 {
            return Err(Error::InvalidRule("last knot must be (1, 1)".into()));
        }
        Ok(Tabulated { us, ps })
    }

    /// Reads `u,psi` lines; blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut knots = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.map(str::trim)
                    .ok_or_else(|| Error::Parse(format!("line {}: expected `u,psi`", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let u = parse(parts.next())?;
            let p = parse(parts.next())?;
            knots.push((u, p));
        }
        Tabulated::new(&knots)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.us.iter().copied().zip(self.ps.iter().copied())
    }

    fn cdf(&self, u: f64) -> f64 {
        let j = self.us.partition_point(|&x| x <= u);
        if j == 0 {
            return self.ps[0];
        }
        if j == self.us.len() {
            return 1.0;
        }
        let (u0, u1) = (self.us[j - 1], self.us[j]);
        let (p0, p1) = (self.ps[j - 1], self.ps[j]);
        p0 + (p1 - p0) * (u - u0) / (u1 - u0)
    }

    fn inverse(&self, w: f64) -> f64 {
        let j = self.ps.partition_point(|&p| p < w);
        if j == 0 {
            return self.us[0];
        }
        if j == self.ps.len() {
            return 1.0;
        }
        let (u0, u1) = (self.us[j - 1], self.us[j]);
        let (p0, p1) = (self.ps[j - 1], self.ps[j]);
        u0 + (w - p0) / (p1 - p0) * (u1 - u0)
    }

    fn complement(&self, u: f64) -> f64 {
        let j = self.us.partition_point(|&x| x <= u);
        if j == 0 {
            return 1.0 - self.ps[0];
        }
        if j == self.us.len() {
            return 0.0;
        }
        let (u0, u1) = (self.us[j - 1], self.us[j]);
        let (p0, p1) = (self.ps[j - 1], self.ps[j]);
        (1.0 - p1) + (p1 - p0) * (u1 - u) / (u1 - u0)
    }
}

/// Absolutely continuous rule given by a piecewise-linear density sampled on
/// an equally spaced grid over `[0, 1]`. The samples are normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRule {
    values: Vec<f64>,
    cumulative: Vec<f64>,
    /// Mass to the right of each sample, summed from `u = 1` down.
    upper: Vec<f64>,
}

impl DensityRule {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidRule("density grid needs at least two samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidRule("density samples must be finite and nonnegative".into()));
        }
        let step = 1.0 / (samples.len() - 1) as f64;
        let mass: f64 = samples.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
        if mass <= 0.0 {
            return Err(Error::InvalidRule("density has zero mass".into()));
        }
        let values: Vec<f64> = samples.iter().map(|v| v / mass).collect();
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * step;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        let mut upper = vec![0.0; values.len()];
        for j in (0..values.len() - 1).rev() {
            upper[j] = upper[j + 1] + 0.5 * (values[j] + values[j + 1]) * step;
        }
        Ok(DensityRule { values, cumulative, upper })
    }

    fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let step = self.step();
        let m = self.values.len() - 1;
        let j = ((u / step).floor() as usize).min(m - 1);
        (j, u - j as f64 * step)
    }

    fn density(&self, u: f64) -> f64 {
        let (j, s) = self.locate(u);
        let t = s / self.step();
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }

    fn cdf(&self, u: f64) -> f64 {
        let (j, s) = self.locate(u);
        let slope = (self.values[j + 1] - self.values[j]) / self.step();
        (self.cumulative[j] + self.values[j] * s + 0.5 * slope * s * s).min(1.0)
    }

    fn complement(&self, u: f64) -> f64 {
        let (j, s) = self.locate(u);
        let m = self.values.len() - 1;
        // measured from u = 1 so that r stays exact near the right end
        let r = if j + 1 == m { 1.0 - u } else { self.step() - s };
        let slope = (self.values[j + 1] - self.values[j]) / self.step();
        (self.upper[j + 1] + self.values[j + 1] * r - 0.5 * slope * r * r).max(0.0)
    }

    fn inverse(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let step = self.step();
        let m = self.values.len() - 1;
        let j = self.cumulative[1..].partition_point(|&c| c < w).min(m - 1);
        let rest = w - self.cumulative[j];
        let b = self.values[j];
        let a = (self.values[j + 1] - self.values[j]) / step;
        let disc = (b * b + 2.0 * a * rest).max(0.0);
        let denom = b + disc.sqrt();
        let s = if denom > 0.0 { 2.0 * rest / denom } else { 0.0 };
        (j as f64 * step + s.clamp(0.0, step)).min(1.0)
    }
}

/// How the limiting profile approaches its tail value, as implied by `ψ(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailKind {
    /// `ψ(1) > 0`: `F'` decays like `x·exp(−ψ(1)x)`.
    Exponential,
    /// `ψ(1) = 0` (min-k): `1 − F` decays polynomially.
    Power,
    /// No density: integrals are truncated at the grid end.
    Truncated,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChoiceRule {
    /// `Ψ(u) = u^k`: keep the point falling in the largest of `k` candidates.
    MaxK(u32),
    /// `Ψ(u) = 1 − (1−u)^k`: keep the point falling in the smallest.
    MinK(u32),
    /// `Ψ(u) = u`: plain uniform splitting.
    Uniform,
    /// `Ψ(u) = 1[u ≥ 1]`: always split the largest interval.
    Kakutani,
    Tabulated(Tabulated),
    Density(DensityRule),
}

/// Outcome of checking continuity and the lower bound `1 − Ψ(u) ≥ c(1−u)^κ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assumptions {
    pub continuous: bool,
    pub kappa: Option<f64>,
    pub c: Option<f64>,
    pub violation: Option<String>,
}

impl Assumptions {
    pub fn satisfied(&self) -> bool {
        self.continuous && self.kappa.is_some() && self.violation.is_none()
    }
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::domain(u, "[0, 1]"))
    }
}

impl ChoiceRule {
    pub fn max_k(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidRule("max:K needs K >= 1".into()));
        }
        Ok(ChoiceRule::MaxK(k))
    }

    pub fn min_k(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidRule("min:K needs K >= 1".into()));
        }
        Ok(ChoiceRule::MinK(k))
    }

    /// Parses `max:K`, `min:K`, `uniform`, `kakutani` or `table:PATH`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::InvalidRule(format!("cannot parse `{text}`"));
        match text.split_once(':') {
            Some(("max", k)) => ChoiceRule::max_k(k.parse().map_err(|_| bad())?),
            Some(("min", k)) => ChoiceRule::min_k(k.parse().map_err(|_| bad())?),
            Some(("table", path)) => Ok(ChoiceRule::Tabulated(Tabulated::from_file(Path::new(path))?)),
            None if text == "uniform" => Ok(ChoiceRule::Uniform),
            None if text == "kakutani" => Ok(ChoiceRule::Kakutani),
            _ => Err(bad()),
        }
    }

    pub fn cdf(&self, u: f64) -> Result<f64> {
        check_unit(u)?;
        Ok(self.cdf_unchecked(u))
    }

    /// `Ψ` with its argument clamped into `[0, 1]`; used by the solvers, whose
    /// intermediate stages may step marginally outside.
    pub fn cdf_clamped(&self, u: f64) -> f64 {
        self.cdf_unchecked(u.clamp(0.0, 1.0))
    }

    fn cdf_unchecked(&self, u: f64) -> f64 {
        match self {
            ChoiceRule::MaxK(k) => u.powi(*k as i32),
            ChoiceRule::MinK(k) => 1.0 - (1.0 - u).powi(*k as i32),
            ChoiceRule::Uniform => u,
            ChoiceRule::Kakutani => {
                if u >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ChoiceRule::Tabulated(t) => t.cdf(u),
            ChoiceRule::Density(d) => d.cdf(u),
        }
    }

    /// `1 − Ψ(u)`, evaluated without cancellation where the closed form allows.
    pub fn complement_clamped(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            ChoiceRule::MaxK(k) => -(*k as f64 * u.ln()).exp_m1(),
            ChoiceRule::MinK(k) => (1.0 - u).powi(*k as i32),
            ChoiceRule::Uniform => 1.0 - u,
            ChoiceRule::Kakutani => {
                if u >= 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
            ChoiceRule::Tabulated(t) => t.complement(u),
            ChoiceRule::Density(d) => d.complement(u),
        }
    }

    /// Generalized inverse `inf{u : Ψ(u) ≥ w}` for `w ∈ [0, 1]`.
    pub fn inverse_cdf(&self, w: f64) -> Result<f64> {
        check_unit(w)?;
        Ok(match self {
            ChoiceRule::MaxK(k) => w.powf(1.0 / *k as f64),
            ChoiceRule::MinK(k) => 1.0 - (1.0 - w).powf(1.0 / *k as f64),
            ChoiceRule::Uniform => w,
            ChoiceRule::Kakutani => {
                if w > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ChoiceRule::Tabulated(t) => t.inverse(w),
            ChoiceRule::Density(d) => d.inverse(w),
        })
    }

    /// Draws `u ~ dΨ` by inverting a uniform variate on `(0, 1]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let ChoiceRule::Kakutani = self {
            return 1.0;
        }
        let w = 1.0 - rng.gen::<f64>();
        self.inverse_cdf(w).expect("w lies in (0, 1]")
    }

    pub fn has_density(&self) -> bool {
        matches!(self, ChoiceRule::MaxK(_) | ChoiceRule::MinK(_) | ChoiceRule::Uniform | ChoiceRule::Density(_))
    }

    pub fn density(&self, u: f64) -> Result<Option<f64>> {
        check_unit(u)?;
        Ok(self.density_unchecked(u))
    }

    pub fn density_clamped(&self, u: f64) -> Option<f64> {
        self.density_unchecked(u.clamp(0.0, 1.0))
    }

    fn density_unchecked(&self, u: f64) -> Option<f64> {
        match self {
            ChoiceRule::MaxK(k) => Some(*k as f64 * u.powi(*k as i32 - 1)),
            ChoiceRule::MinK(k) => Some(*k as f64 * (1.0 - u).powi(*k as i32 - 1)),
            ChoiceRule::Uniform => Some(1.0),
            ChoiceRule::Density(d) => Some(d.density(u)),
            ChoiceRule::Kakutani | ChoiceRule::Tabulated(_) => None,
        }
    }

    pub fn tail_kind(&self) -> TailKind {
        match self.density_unchecked(1.0) {
            Some(p) if p > 0.0 => TailKind::Exponential,
            Some(_) => TailKind::Power,
            None => TailKind::Truncated,
        }
    }

    /// Default right end of the solver grid: power tails need a much longer range.
    pub fn default_grid_max(&self) -> f64 {
        match self.tail_kind() {
            TailKind::Power => 1.0e4,
            _ => 40.0,
        }
    }

    pub fn check_assumptions(&self) -> Assumptions {
        match self {
            ChoiceRule::MaxK(_) | ChoiceRule::Uniform => {
                Assumptions { continuous: true, kappa: Some(1.0), c: Some(1.0), violation: None }
            }
            ChoiceRule::MinK(k) => {
                Assumptions { continuous: true, kappa: Some(*k as f64), c: Some(1.0), violation: None }
            }
            ChoiceRule::Kakutani => {
                Assumptions { continuous: false, kappa: None, c: None, violation: Some("Ψ jumps at u = 1".into()) }
            }
            ChoiceRule::Tabulated(_) | ChoiceRule::Density(_) => self.fit_lower_bound(),
        }
    }

    /// Fits `κ` from the decay of `1 − Ψ` on `u = 1 − 2^{-j}`, then takes the
    /// largest `c` for which the bound holds on that grid and on a uniform grid.
    fn fit_lower_bound(&self) -> Assumptions {
        let dyadic: Vec<f64> = (1..=40).map(|j| 1.0 - (-(j as f64)).exp2()).collect();
        let uniform = (0..1024).map(|i| i as f64 / 1024.0);
        let mut points: Vec<f64> = dyadic.iter().copied().chain(uniform).collect();
        points.sort_by(f64::total_cmp);

        if let Some(&u) = points.iter().find(|&&u| self.complement_clamped(u) <= 0.0) {
            return Assumptions {
                continuous: true,
                kappa: None,
                c: None,
                violation: Some(format!("1 − Ψ(u) vanishes at u = {u} < 1")),
            };
        }

        // Least-squares slope of log(1 − Ψ) against log(1 − u) over j = 30..40.
        let tail: Vec<(f64, f64)> = (30..=40)
            .map(|j| {
                let u = dyadic[j - 1];
                (-(j as f64) * std::f64::consts::LN_2, self.complement_clamped(u).ln())
            })
            .collect();
        let n = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let mut kappa = (sxy / sxx).max(1.0);
        if (kappa - kappa.round()).abs() < 1e-6 {
            kappa = kappa.round();
        }
        let c =
            points.iter().map(|&u| self.complement_clamped(u) / (1.0 - u).powf(kappa)).fold(f64::INFINITY, f64::min);
        Assumptions { continuous: true, kappa: Some(kappa), c: Some(c), violation: None }
    }
}

impl fmt::Display for ChoiceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChoiceRule::MaxK(k) => write!(f, "max:{k}"),
            ChoiceRule::MinK(k) => write!(f, "min:{k}"),
            ChoiceRule::Uniform => write!(f, "uniform"),
            ChoiceRule::Kakutani => write!(f, "kakutani"),
            ChoiceRule::Tabulated(t) => write!(f, "table[{} knots]", t.us.len()),
            ChoiceRule::Density(d) => write!(f, "density[{} samples]", d.values.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_rules() -> Vec<ChoiceRule> {
        vec![
            ChoiceRule::MaxK(1),
            ChoiceRule::MaxK(2),
            ChoiceRule::MaxK(7),
            ChoiceRule::MinK(2),
            ChoiceRule::MinK(5),
            ChoiceRule::Uniform,
            ChoiceRule::Kakutani,
            ChoiceRule::Tabulated(Tabulated::new(&[(0.3, 0.1), (0.5, 0.1), (1.0, 1.0)]).unwrap()),
            ChoiceRule::Density(DensityRule::new(&[0.0, 1.0, 3.0, 0.5, 2.0]).unwrap()),
        ]
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(ChoiceRule::MaxK(2).cdf(0.5).unwrap(), 0.25);
        assert_eq!(ChoiceRule::MinK(2).cdf(0.5).unwrap(), 0.75);
        assert_eq!(ChoiceRule::Kakutani.cdf(0.999).unwrap(), 0.0);
        assert_eq!(ChoiceRule::Kakutani.cdf(1.0).unwrap(), 1.0);
        assert!(matches!(ChoiceRule::Uniform.cdf(1.5), Err(Error::Domain { .. })));
        assert!(ChoiceRule::Uniform.cdf(-0.1).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert!((ChoiceRule::MaxK(2).inverse_cdf(0.49).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(ChoiceRule::Uniform.inverse_cdf(0.3).unwrap(), 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(ChoiceRule::Kakutani.sample(&mut rng), 1.0);
        }
    }

    #[test]
    fn density_examples() {
        assert_eq!(ChoiceRule::MaxK(2).density(0.5).unwrap(), Some(1.0));
        assert_eq!(ChoiceRule::MinK(3).density(0.0).unwrap(), Some(3.0));
        assert_eq!(ChoiceRule::Kakutani.density(0.5).unwrap(), None);
        assert!(ChoiceRule::MaxK(2).density(1.2).is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        for rule in all_rules().into_iter().filter(ChoiceRule::has_density) {
            // composite Simpson on 20000 panels
            let n = 20_000;
            let h = 1.0 / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                s += w * rule.density(i as f64 * h).unwrap().unwrap();
            }
            s *= h / 3.0;
            assert!((s - 1.0).abs() < 1e-6, "{rule}: {s}");
        }
    }

    #[test]
    fn max_k_matches_maximum_of_uniforms_pointwise() {
        for k in 1..=6u32 {
            let rule = ChoiceRule::MaxK(k);
            for i in 0..=1000 {
                let w = i as f64 / 1000.0;
                let u = rule.inverse_cdf(w).unwrap();
                assert!((u - w.powf(1.0 / k as f64)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn max_k_samples_pass_kolmogorov_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [2u32, 3, 10] {
            let rule = ChoiceRule::MaxK(k);
            let n = 100_000;
            let mut xs: Vec<f64> = (0..n).map(|_| rule.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let mut d: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let f = x.powi(k as i32);
                d = d.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
            }
            assert!(d < 0.01, "k={k}: D={d}");
        }
    }

    #[test]
    fn generalized_inverse_on_flats_and_kakutani() {
        let t = ChoiceRule::Tabulated(Tabulated::new(&[(0.3, 0.1), (0.5, 0.1), (1.0, 1.0)]).unwrap());
        // Ψ is flat at 0.1 on [0.3, 0.5]; the infimum picks the left end.
        assert!((t.inverse_cdf(0.1).unwrap() - 0.3).abs() < 1e-15);
        assert!((t.inverse_cdf(0.55).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(ChoiceRule::Kakutani.inverse_cdf(0.2).unwrap(), 1.0);
    }

    #[test]
    fn tabulated_validation() {
        assert!(Tabulated::new(&[(0.5, 0.2), (0.4, 0.3), (1.0, 1.0)]).is_err());
        assert!(Tabulated::new(&[(0.5, 0.4), (0.7, 0.3), (1.0, 1.0)]).is_err());
        assert!(Tabulated::new(&[(0.5, 0.4), (0.9, 0.8)]).is_err());
        assert!(Tabulated::new(&[(0.0, 0.2), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["max:2", "min:5", "uniform", "kakutani"] {
            assert_eq!(ChoiceRule::parse(s).unwrap().to_string(), s);
        }
        assert!(ChoiceRule::parse("max:0").is_err());
        assert!(ChoiceRule::parse("foo").is_err());
        assert!(ChoiceRule::parse("max:x").is_err());
    }

    #[test]
    fn table_file_parse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.csv");
        std::fs::write(&path, "0.25,0.0625\n0.5,0.25\n0.75,0.5625\n1.0,1.0\n").unwrap();
        let rule = ChoiceRule::parse(&format!("table:{}", path.display())).unwrap();
        assert!((rule.cdf(0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(rule.density(0.5).unwrap(), None);
    }

    #[test]
    fn assumption_examples() {
        let a = ChoiceRule::MaxK(3).check_assumptions();
        assert_eq!((a.continuous, a.kappa, a.c), (true, Some(1.0), Some(1.0)));
        // 1 − u³ = (1−u)(1+u+u²) ≥ 1 − u on (0,1)
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            assert!(1.0 - u.powi(3) >= 1.0 - u);
        }
        let a = ChoiceRule::MinK(2).check_assumptions();
        assert_eq!((a.continuous, a.kappa, a.c), (true, Some(2.0), Some(1.0)));
        let a = ChoiceRule::Kakutani.check_assumptions();
        assert_eq!((a.continuous, a.kappa, a.c), (false, None, None));
        assert!(!a.satisfied());
    }

    #[test]
    fn numeric_assumption_fit() {
        let t = ChoiceRule::Tabulated(Tabulated::new(&[(0.5, 0.25), (1.0, 1.0)]).unwrap());
        let a = t.check_assumptions();
        assert_eq!(a.kappa, Some(1.0));
        assert!(a.c.unwrap() > 0.0 && a.c.unwrap() <= 1.0 + 1e-12, "{a:?}");
        // flat at 1 before u = 1: assumption (D) fails
        let flat = ChoiceRule::Tabulated(Tabulated::new(&[(0.9, 1.0), (1.0, 1.0)]).unwrap());
        let a = flat.check_assumptions();
        assert!(a.violation.is_some() && a.kappa.is_none());
        // ψ(u) = 3(1−u)² sampled: near u = 1 the piecewise-linear density vanishes linearly
        let samples: Vec<f64> = (0..=200).map(|i| 3.0 * (1.0 - i as f64 / 200.0).powi(2)).collect();
        let d = ChoiceRule::Density(DensityRule::new(&samples).unwrap());
        let a = d.check_assumptions();
        assert_eq!(a.kappa, Some(2.0));
    }

    proptest! {
        #[test]
        fn cdf_is_monotone(u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
            let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
            for rule in all_rules() {
                let a = rule.cdf(lo).unwrap();
                let b = rule.cdf(hi).unwrap();
                prop_assert!(a <= b + 1e-15, "{}: Ψ({})={} > Ψ({})={}", rule, lo, a, hi, b);
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert_eq!(rule.cdf(1.0).unwrap(), 1.0);
            }
        }

        #[test]
        fn inverse_is_generalized_inverse(w in 0.0f64..=1.0) {
            for rule in all_rules() {
                let u = rule.inverse_cdf(w).unwrap();
                prop_assert!(rule.cdf(u).unwrap() >= w - 1e-12);
                if u > 1e-9 {
                    prop_assert!(rule.cdf((u - 1e-7).max(0.0)).unwrap() <= w + 1e-12);
                }
            }
        }
    }
}
