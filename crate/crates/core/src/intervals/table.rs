use rand::distributions::Open01;
use rand::Rng;
use serde::Serialize;

use super::tree::Treap;
use crate::error::{Error, Result};
use crate::evolution::{Grid, GridFunction, TailModel};
use crate::psi::ChoiceRule;

/// Lengths below this abort the run.
pub const UNDERFLOW: f64 = 1e-300;

/// `W(v) = v ln v + (1−v) ln(1−v)`.
pub fn w_entropy(v: f64) -> f64 {
    let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    xlogx(v) + xlogx(1.0 - v)
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitEvent {
    pub step: u64,
    /// Draw from `dΨ`; `None` when the split was forced through [`IntervalTable::split_at`].
    pub u: Option<f64>,
    pub chosen_length: f64,
    pub fraction: f64,
    pub entropy_increment: f64,
    pub new_lengths: (f64, f64),
    pub time: Option<f64>,
}

/// The live interval configuration on the unit circle.
#[derive(Debug, Clone)]
pub struct IntervalTable {
    tree: Treap,
    total_length: f64,
    step_index: u64,
    next_id: u64,
    starts: Option<Vec<f64>>,
    split_points: Vec<f64>,
    clock: Option<f64>,
    entropy_raw: Compensated,
}

impl IntervalTable {
    /// Builds a table from lengths summing to 1 within `1e-9`; they are
    /// renormalized before storage.
    pub fn from_config(lengths: &[f64]) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::EmptyConfig);
        }
        if let Some(&bad) = lengths.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::NonPositiveLength(bad));
        }
        let mut s = Compensated::default();
        lengths.iter().for_each(|&l| s.add(l));
        let sum = s.value();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::SumMismatch(sum));
        }
        let mut tree = Treap::with_capacity(lengths.len());
        let mut total = Compensated::default();
        let mut entropy = Compensated::default();
        for (id, &l) in lengths.iter().enumerate() {
            let l = l / sum;
            if l < UNDERFLOW {
                return Err(Error::NonPositiveLength(l));
            }
            tree.insert(l, id as u64);
            total.add(l);
            entropy.add(l * l.ln());
        }
        Ok(IntervalTable {
            tree,
            total_length: total.value(),
            step_index: 0,
            next_id: lengths.len() as u64,
            starts: None,
            split_points: Vec::new(),
            clock: None,
            entropy_raw: entropy,
        })
    }

    /// `m` intervals cut by `m − 1` uniform points (plus one at 0) on the circle.
    pub fn random_config<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(Error::EmptyConfig);
        }
        let mut cuts: Vec<f64> = (1..m).map(|_| rng.gen::<f64>()).collect();
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        let lengths: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).filter(|&l| l > 0.0).collect();
        Ok(lengths)
    }

    /// Records start coordinates, laying the initial intervals out in input order from 0.
    pub fn with_positions(mut self) -> Self {
        let mut starts = vec![f64::NAN; self.tree.len()];
        let mut handles = Vec::with_capacity(self.tree.len());
        self.tree.for_each_in_order(|h, _| handles.push(h));
        handles.sort_by_key(|&h| self.tree.id(h));
        let mut acc = Compensated::default();
        for h in handles {
            starts[h as usize] = acc.value();
            acc.add(self.tree.length(h));
        }
        self.starts = Some(starts);
        self
    }

    /// Enables the continuous clock, started at `t = 0`.
    pub fn with_clock(mut self) -> Self {
        self.clock = Some(0.0);
        self
    }

    pub fn count(&self) -> usize {
        self.tree.len()
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn clock(&self) -> Option<f64> {
        self.clock
    }

    pub fn positions_enabled(&self) -> bool {
        self.starts.is_some()
    }

    pub fn split_points(&self) -> Result<&[f64]> {
        if self.starts.is_none() {
            return Err(Error::PositionsDisabled);
        }
        Ok(&self.split_points)
    }

    /// `F̃(x) = Σ_{I_i ≤ x} I_i / total`.
    pub fn size_biased_cdf(&self, x: f64) -> f64 {
        (self.tree.prefix_sum_le(x) / self.tree.total()).min(1.0)
    }

    /// `inf{x : F̃(x) ≥ u}` and the handle of the interval realizing it.
    pub fn size_biased_quantile(&self, u: f64) -> Result<(f64, u32)> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(u, "[0, 1]"));
        }
        Ok(self.quantile(u))
    }

    fn quantile(&self, u: f64) -> (f64, u32) {
        let h = self.tree.select_by_weight(u * self.tree.total()).expect("table is never empty");
        (self.tree.length(h), h)
    }

    pub fn largest(&self) -> f64 {
        self.tree.length(self.tree.max().expect("table is never empty"))
    }

    pub fn smallest(&self) -> f64 {
        self.tree.length(self.tree.min().expect("table is never empty"))
    }

    /// Lengths in increasing order.
    pub fn sorted_lengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count());
        self.tree.for_each_in_order(|_, l| out.push(l));
        out
    }

    /// `(H̃, H̃ + ln count)` with `H̃ = Σ I ln I` recomputed from scratch.
    pub fn entropy(&self) -> (f64, f64) {
        let mut acc = Compensated::default();
        self.tree.for_each_in_order(|_, l| acc.add(l * l.ln()));
        let raw = acc.value();
        (raw, raw + (self.count() as f64).ln())
    }

    /// Running raw entropy accumulated from split increments.
    pub fn entropy_running(&self) -> f64 {
        self.entropy_raw.value()
    }

    /// `|Σ I_i (1/I_i) − count|`: the mass identity `∫ x⁻² F̃ = count` in closed form.
    pub fn mass_residual(&self) -> f64 {
        let mut acc = Compensated::default();
        self.tree.for_each_in_order(|_, l| acc.add(l * (1.0 / l)));
        (acc.value() - self.count() as f64).abs()
    }

    /// `|Σ I_i − 1|` by compensated recomputation.
    pub fn length_drift(&self) -> f64 {
        let mut acc = Compensated::default();
        self.tree.for_each_in_order(|_, l| acc.add(l));
        (acc.value() - 1.0).abs()
    }

    pub fn audit(&self) -> bool {
        self.tree.audit()
    }

    /// Checks that the intervals tile `[0, 1)` up to `tol` at every seam.
    pub fn positions_tile(&self, tol: f64) -> Result<bool> {
        let starts = self.starts.as_ref().ok_or(Error::PositionsDisabled)?;
        let mut spans = Vec::with_capacity(self.count());
        self.tree.for_each_in_order(|h, l| spans.push((starts[h as usize], l)));
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cursor = 0.0;
        for (s, l) in spans {
            if (s - cursor).abs() > tol {
                return Ok(false);
            }
            cursor = s + l;
        }
        Ok((cursor - 1.0).abs() <= tol)
    }

    /// One Ψ-process step.
    pub fn split_step<R: Rng + ?Sized>(&mut self, rule: &ChoiceRule, rng: &mut R) -> Result<SplitEvent> {
        let u = rule.sample(rng);
        let (_, h) = self.quantile(u);
        let v: f64 = rng.sample(Open01);
        let clock_draw = self.clock.map(|_| -(1.0 - rng.gen::<f64>()).ln());
        let mut ev = self.split_handle(h, v, clock_draw)?;
        ev.u = Some(u);
        Ok(ev)
    }

    /// Splits the interval `handle` at fraction `v ∈ (0, 1)`.
    pub fn split_at(&mut self, handle: u32, v: f64) -> Result<SplitEvent> {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(v, "(0, 1)"));
        }
        self.split_handle(handle, v, self.clock.map(|_| 1.0))
    }

    /// Handle of the interval `size_biased_quantile` would pick for `u`.
    pub fn handle_for(&self, u: f64) -> Result<u32> {
        Ok(self.size_biased_quantile(u)?.1)
    }

    fn split_handle(&mut self, h: u32, v: f64, clock_draw: Option<f64>) -> Result<SplitEvent> {
        let ell = self.tree.length(h);
        // The pair is formed so that a + b == ell exactly (Sterbenz on the larger piece).
        let mut a = v * ell;
        let b;
        if a <= 0.5 * ell {
            b = ell - a;
            a = ell - b;
        } else {
            b = ell - a;
        }
        let step = self.step_index + 1;
        let smaller = a.min(b);
        if smaller < UNDERFLOW {
            return Err(Error::LengthUnderflow { step, length: smaller });
        }
        let start = self.starts.as_ref().map(|s| s[h as usize]);
        self.tree.remove(h);
        let ha = self.tree.insert(a, self.next_id);
        let hb = self.tree.insert(b, self.next_id + 1);
        self.next_id += 2;
        if let (Some(starts), Some(s)) = (self.starts.as_mut(), start) {
            let need = ha.max(hb) as usize + 1;
            if starts.len() < need {
                starts.resize(need, f64::NAN);
            }
            starts[ha as usize] = s;
            let cut = s + a;
            starts[hb as usize] = cut;
            self.split_points.push(cut - cut.floor());
        }
        let inc = ell * w_entropy(v);
        self.entropy_raw.add(inc);
        self.step_index = step;
        if let (Some(t), Some(e)) = (self.clock.as_mut(), clock_draw) {
            *t = (t.exp() + e).ln();
        }
        Ok(SplitEvent {
            step,
            u: None,
            chosen_length: ell,
            fraction: v,
            entropy_increment: inc,
            new_lengths: (a, b),
            time: self.clock,
        })
    }

    /// Size-biased CDF of the rescaled lengths `count · I_i` on `grid`.
    pub fn empirical_rescaled_cdf(&self, grid: &Grid) -> GridFunction {
        let n = self.count() as f64;
        let total = self.tree.total();
        let values: Vec<f64> = grid.xs().iter().map(|&x| (self.tree.prefix_sum_le(x / n) / total).min(1.0)).collect();
        GridFunction::from_values(grid, values, 1.0, TailModel::Truncated)
            .expect("empirical CDF is monotone and bounded")
    }
}
